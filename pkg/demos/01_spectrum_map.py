# %% [markdown]
# # From representation covariance to FIM spectrum
#
# A covariance spectrum ν is compressed into the FIM spectrum
# λ = ν / (ν + σ²L²) / σ². Ordering is kept, and every λ stays below 1/σ².

# %%
import numpy as np

from fimeff import fim

nu = np.array([4.0, 3.0, 2.0, 1.0])
cfg = fim.GaussianModelConfig(sigma_sq=1.0, lipschitz=1.0, dim=4)
lam = fim.fim_spectrum_from_cov(nu, cfg)
print("nu     :", nu)
print("lambda :", lam)

# %% [markdown]
# Effective dimension counts how many leading directions hold 1 - ε of the
# total. Compression flattens the spectrum, so λ can need more directions than ν.

# %%
for eps in (0.05, 0.1, 0.3):
    print(f"eps={eps:<5} d_eff(nu)={fim.effective_dimension(nu, eps)}  d_eff(lambda)={fim.effective_dimension(lam, eps)}")

# %% [markdown]
# A full report bundles the spectra, d_eff, η and the condition number.

# %%
rep = fim.build_report(np.diag(nu), cfg, epsilon=0.1)
print(rep)
