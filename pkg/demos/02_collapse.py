# %% [markdown]
# # Spotting dimensional collapse
#
# Duplicate one coordinate of an isotropic sample and compare reports.

# %%
import numpy as np

from fimeff import fim, spectral

rng = np.random.default_rng(0)
z = rng.standard_normal((20_000, 8))

healthy = fim.build_report(spectral.covariance(z))
print("isotropic : eta =", healthy.eta, " cond =", round(healthy.condition_number, 3))

# %%
z[:, 3] = z[:, 2]
collapsed = fim.build_report(spectral.covariance(z))
print("duplicated: eta =", collapsed.eta, " cond =", collapsed.condition_number)
print("null dimensions:", collapsed.null_dimensions)
