"""Command-line entry point: ``fimeff {analyze,train,validate,loss}``.

Exit status: 0 success / all checks passed, 1 a validation failed, 2 usage
or precondition error, 3 input or parse error, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, fields

import numpy as np

from . import barlow, fim, formats, lab, spectral
from .errors import (
    DegenerateColumnError,
    DegenerateSpectrumError,
    DivergenceError,
    FimEffError,
    InputError,
    PreconditionError,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2, 3, 4
CLAIMS = ("lemma1", "lemma3", "lemma4", "theorem1", "theorem2", "prop1", "all")


class UsageError(Exception):
    pass


def _emit(doc, out_path):
    text = formats.dumps(doc)
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text)


def _load(path, fmt):
    z = formats.read_embeddings(path, fmt)
    return spectral.as_batch(z)


def _collapse_diagnosis(z) -> dict:
    std = z.std(axis=0)
    return {"zero_variance_columns": [int(i) for i in np.flatnonzero(std <= barlow.STD_FLOOR)]}


def cmd_analyze(args) -> int:
    z = _load(args.input, args.format)
    n, d = z.shape
    cov = spectral.covariance(z)
    cfg = fim.GaussianModelConfig(args.sigma_sq, args.lipschitz, d)
    config = {
        "epsilon": args.epsilon,
        "sigma_sq": args.sigma_sq,
        "lipschitz": args.lipschitz,
        "noise_var": args.noise_var,
        "lambda": args.lam,
    }
    collapse = _collapse_diagnosis(z)
    try:
        corr = None
        sections = {}
        if args.noise_var is not None:
            corr = barlow.population_cross_correlation(cov, args.noise_var)
            sections["population_correlation"] = corr
            sections["loss"] = barlow.bt_loss(corr, args.lam)
        report = fim.build_report(cov, cfg, args.epsilon, correlation=corr)
    except DegenerateSpectrumError as exc:
        cols = ", ".join(map(str, collapse["zero_variance_columns"]))
        print(f"error: collapsed representation: {exc}; null dimensions: {cols}", file=sys.stderr)
        return EXIT_INPUT
    collapse["null_eigen_count"] = report.null_dimensions
    doc = formats.make_document(
        "analyze",
        config=config,
        input={"path": str(args.input), "format": args.format or formats.sniff_format(args.input), "n": n, "d": d},
        report=report,
        collapse=collapse,
        **sections,
    )
    _emit(doc, args.out)
    return EXIT_OK


def _theorem2_config(args) -> lab.Theorem2Config:
    cfg = lab.Theorem2Config()
    overrides = {
        "d_in": args.d_in,
        "d_out": args.d_out,
        "lam": args.lam,
        "lr": args.lr,
        "steps": args.steps,
        "batch_n": args.batch_n,
        "noise_var": args.noise_var,
        "epsilon": args.epsilon,
        "sigma_sq": args.sigma_sq,
        "lipschitz": args.lipschitz,
        "seed": args.seed,
    }
    names = {f.name for f in fields(cfg)}
    for key, value in overrides.items():
        if value is not None and key in names:
            setattr(cfg, key, value)
    if cfg.steps < 1:
        raise UsageError(f"--steps must be >= 1, got {cfg.steps}")
    return cfg


def cmd_train(args) -> int:
    cfg = _theorem2_config(args)
    data_cov = np.eye(cfg.d_in)
    enc, trace = barlow.train_toy(
        data_cov,
        cfg.encoder_init(),
        cfg.augmentation(),
        lam=cfg.lam,
        lr=cfg.lr,
        steps=cfg.steps,
        batch_n=cfg.batch_n,
        report_eps=cfg.epsilon,
        seed=cfg.seed,
        model=cfg.model(),
    )
    if args.trace_out:
        formats.write_trace_csv(args.trace_out, trace)
    ev = lab.evaluate_encoder(enc, data_cov, cfg)
    final = trace.final
    doc = formats.make_document(
        "train",
        config=asdict(cfg),
        final_step={c: getattr(final, c) for c in barlow.TRACE_COLUMNS},
        evaluation={"offdiag_mass": ev.offdiag_mass, "diag_gap": ev.diag_gap, "eval_n": cfg.eval_n},
        report=ev.report,
        encoder={"weights": enc.weights, "bias": enc.bias},
    )
    _emit(doc, args.out)
    return EXIT_OK


def _run_claim(claim, args) -> list:
    seed = args.seed if args.seed is not None else 0
    noise = args.noise_var
    if claim == "lemma1":
        cfg = fim.GaussianModelConfig(args.sigma_sq or 1.0, args.lipschitz or 1.0, 4)
        return [lab.validate_lemma1(cfg, args.samples or 100_000, seed)]
    if claim == "lemma3":
        spec = lab.SyntheticSpec((2.0, 1.0), sample_count=args.samples or 100_000)
        return [lab.validate_lemma3(spec, noise if noise is not None else 1.0, seed)]
    if claim == "lemma4":
        return [lab.validate_lemma4(1.0, noise if noise is not None else 1.0, 3)]
    if claim == "theorem1":
        d = 16
        cfg = fim.GaussianModelConfig(args.sigma_sq or 1.0, args.lipschitz or 1.0, d)
        return [lab.validate_theorem1(lab.SyntheticSpec((3.0,) * d), cfg, noise if noise is not None else 1.0)]
    if claim == "theorem2":
        return [lab.validate_theorem2(_theorem2_config(args))]
    if claim == "prop1":
        eps = args.epsilon if args.epsilon is not None else fim.DEFAULT_EPSILON
        return lab.sweep_spectrum_map(epsilon=eps)
    raise UsageError(f"unknown claim {claim!r}")


def cmd_validate(args) -> int:
    claims = CLAIMS[:-1] if args.claim == "all" else (args.claim,)
    results = []
    for claim in claims:
        results.extend(_run_claim(claim, args))
    passed = all(r.passed for r in results)
    doc = formats.make_document(
        "validate",
        claim=args.claim,
        passed=passed,
        results=[formats.to_tree(r) for r in results],
    )
    _emit(doc, args.out)
    groups = {}
    for r in results:
        groups.setdefault(r.name, []).append(r)
    for name, group in groups.items():
        ok = sum(r.passed for r in group)
        status = "PASS" if ok == len(group) else "FAIL"
        if len(group) == 1:
            r = group[0]
            detail = ", ".join(f"{k}={r.measured[k]:.3g} (tol {r.tolerance[k]:.3g})" for k in r.measured)
        else:
            detail = f"{ok}/{len(group)} configurations passed"
        print(f"{status} {name}: {detail}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_loss(args) -> int:
    if not args.input_b:
        raise UsageError("loss needs --input and --input-b")
    za = _load(args.input, args.format)
    zb = _load(args.input_b, args.format)
    if za.shape != zb.shape:
        raise InputError(f"shape mismatch: {args.input} is {za.shape}, {args.input_b} is {zb.shape}")
    c = barlow.cross_correlation(za, zb)
    loss = barlow.bt_loss(c, args.lam)
    doc = formats.make_document(
        "loss",
        config={"lambda": args.lam},
        input={"a": str(args.input), "b": str(args.input_b), "n": za.shape[0], "d": za.shape[1]},
        cross_correlation=c,
        loss=loss,
    )
    _emit(doc, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fimeff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, lam_default=barlow.DEFAULT_LAMBDA):
        p.add_argument("--format", choices=formats.FORMATS, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=lam_default)
        p.add_argument("--out", default=None, help="also write the report document here")

    p = sub.add_parser("analyze", help="efficiency report for an embedding matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--epsilon", type=float, default=fim.DEFAULT_EPSILON)
    p.add_argument("--sigma-sq", type=float, default=1.0)
    p.add_argument("--lipschitz", type=float, default=1.0)
    p.add_argument("--noise-var", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_analyze)

    for name, helptext, func in (
        ("train", "train a toy linear encoder", cmd_train),
        ("validate", "run theory checks", cmd_validate),
    ):
        p = sub.add_parser(name, help=helptext)
        if name == "validate":
            p.add_argument("claim", choices=CLAIMS)
            p.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--sigma-sq", type=float, default=None)
        p.add_argument("--lipschitz", type=float, default=None)
        p.add_argument("--noise-var", type=float, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--batch-n", type=int, default=None)
        p.add_argument("--d-in", type=int, default=None)
        p.add_argument("--d-out", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        if name == "train":
            p.add_argument("--trace-out", default=None)
        common(p, lam_default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("loss", help="Barlow Twins loss between two embedding files")
    p.add_argument("--input", required=True)
    p.add_argument("--input-b", required=True)
    common(p)
    p.set_defaults(func=cmd_loss)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except DegenerateColumnError as exc:
        print(f"error: collapsed representation: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FimEffError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
