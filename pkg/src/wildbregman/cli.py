"""Command-line interface: simulate, refit, radius, certify, validate."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .certify import (fixed_design_certificate, random_design_certificate,
                      stability_constants)
from .complexity import (RadiusReport, fixed_point_radius, rhat_bound_convex,
                         wn)
from .design import PredictionMatrix, SignMatrix, load_dataset, save_dataset
from .errors import RejectedInputError
from .geometry import Box
from .harness import CoverageExperiment, SyntheticSpec, generate_synthetic, run_coverage
from .potentials import builtin_loss
from .trainers import LinearTrainer, SaturatedTrainer
from .wildfit import WildRefitResult, calibrate_rho, wild_optimism, wild_refit


def _write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _potential_params(args) -> dict:
    if args.potential == "sqrt_bernoulli":
        return {"eps0": args.eps0}
    if args.potential == "clipped_simplex_kl":
        return {"eta0": args.eta0}
    return {}


def _build_loss(args, d: int):
    return builtin_loss(args.potential, d, **_potential_params(args))


def _build_cset(args, loss, d: int):
    if args.potential == "clipped_simplex_kl":
        return loss.domain
    b = args.cset_bound
    return Box(np.full(d, -b), np.full(d, b))


def _build_trainer(args, loss, cset):
    if args.trainer == "saturated":
        return SaturatedTrainer(loss, cset)
    return LinearTrainer(loss, cset)


def _add_model_flags(p):
    p.add_argument("--potential", default="squared_l2",
                   choices=["squared_l2", "sqrt_bernoulli", "clipped_simplex_kl"])
    p.add_argument("--eps0", type=float, default=0.05)
    p.add_argument("--eta0", type=float, default=0.1)
    p.add_argument("--trainer", default="saturated",
                   choices=["saturated", "linear"])
    p.add_argument("--cset-bound", type=float, default=10.0)


def _cmd_simulate(args) -> int:
    spec = SyntheticSpec(n=args.n, d=args.d, design=args.design,
                         fstar_family=args.fstar, fstar_scale=args.fstar_scale,
                         noise_family=args.noise, noise_scale=args.noise_scale,
                         p=args.p, seed=args.seed)
    loss = _build_loss(args, args.d)
    data, oracle = generate_synthetic(spec, loss)
    prefix = Path(args.out)
    save_dataset(prefix, data, seed=args.seed, potential_kind=args.potential)
    oracle_csv = prefix.parent / (prefix.name + "_oracle.csv")
    with open(oracle_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"fstar_{j + 1}" for j in range(args.d)]
                        + [f"w_{j + 1}" for j in range(args.d)])
        for i in range(args.n):
            writer.writerow([repr(float(v)) for v in oracle.fstar_preds.values[i]]
                            + [repr(float(v)) for v in oracle.noise[i]])
    _write_json(prefix.parent / (prefix.name + "_oracle.json"),
                {"w_inf": oracle.w_inf, "seed": args.seed,
                 "spec": dataclasses.asdict(spec)})
    print(f"wrote {prefix}.csv, {prefix}.json, {oracle_csv}")
    return 0


def _refit_payload(loss, result: WildRefitResult, args) -> dict:
    return {
        "rho": result.rho,
        "clip_count": result.clip_count,
        "sign_seed": result.signs.seed,
        "achieved_radius": result.radius(loss),
        "wild_optimism": wild_optimism(loss, result),
        "fhat": result.fhat.values.tolist(),
        "fdiamond": result.fdiamond.values.tolist(),
        "wild_responses": result.wild_responses.tolist(),
        "residues": result.residues.tolist(),
        "signs": result.signs.values.tolist(),
        "config": {
            "potential": args.potential,
            "potential_params": _potential_params(args),
            "trainer": args.trainer,
            "cset_bound": args.cset_bound,
            "data": str(args.data),
        },
    }


def _cmd_refit(args) -> int:
    data = load_dataset(args.data)
    loss = _build_loss(args, data.d)
    cset = _build_cset(args, loss, data.d)
    trainer = _build_trainer(args, loss, cset)
    if args.rho is not None:
        result = wild_refit(loss, cset, trainer, data, args.rho, seed=args.seed)
    else:
        cal = calibrate_rho(loss, cset, trainer, data, args.target_radius,
                            seed=args.seed)
        result = cal["result"]
    _write_json(args.out, _refit_payload(loss, result, args))
    print(f"wrote {args.out}")
    return 0


def _load_refit(path):
    with open(path) as fh:
        payload = json.load(fh)
    cfg = payload["config"]
    fhat = PredictionMatrix(np.asarray(payload["fhat"], dtype=float))
    d = fhat.d
    loss = builtin_loss(cfg["potential"], d, **cfg["potential_params"])
    if cfg["potential"] == "clipped_simplex_kl":
        cset = loss.domain
    else:
        b = cfg["cset_bound"]
        cset = Box(np.full(d, -b), np.full(d, b))
    signs = SignMatrix(np.asarray(payload["signs"], dtype=float),
                       seed=payload["sign_seed"])
    result = WildRefitResult(
        fhat=fhat,
        fdiamond=PredictionMatrix(np.asarray(payload["fdiamond"], dtype=float)),
        wild_responses=np.asarray(payload["wild_responses"], dtype=float),
        residues=np.asarray(payload["residues"], dtype=float),
        signs=signs, rho=payload["rho"], clip_count=payload["clip_count"])
    return payload, loss, cset, result


def _cmd_radius(args) -> int:
    payload, loss, cset, result = _load_refit(args.refit_result)
    Z = result.symmetrized
    n = result.fhat.n

    def evaluator(r):
        return wn(loss, cset, result.fhat, Z, r)

    r_dia = result.radius(loss)
    if args.mode == "fixed-point":
        r = fixed_point_radius(evaluator, args.delta, n,
                               r_max=max(10.0 * cset.diameter(), 1.0))
        method = "fixed_point"
    else:
        w_inf = float(np.max(np.abs(result.residues)))
        r = rhat_bound_convex(evaluator, max(r_dia, 1e-8), args.delta, n,
                              w_inf, result.fhat.d, args.pilot, loss)
        method = "convex_class_bound"
    report = RadiusReport(r_hat_n=r, r_diamond_rho=r_dia, r_certified=r,
                          method=method)
    _write_json(args.out, report.to_dict() | {"delta": args.delta})
    print(f"wrote {args.out}")
    return 0


def _cmd_certify(args) -> int:
    payload, loss, cset, result = _load_refit(args.refit_result)
    with open(args.radius_report) as fh:
        rep = json.load(fh)
    report = RadiusReport(r_hat_n=rep["r_hat_n"],
                          r_diamond_rho=rep["r_diamond_rho"],
                          r_certified=rep["r_certified"], method=rep["method"])
    data = load_dataset(payload["config"]["data"])
    w_inf = args.w_inf
    if w_inf is None:
        w_inf = float(np.max(np.abs(result.residues)))
    cert = fixed_design_certificate(loss, result, report, args.delta,
                                    args.pilot, args.misspec, w_inf,
                                    responses=data.responses,
                                    calibration_tol=args.calibration_tol)
    if args.mode == "random":
        consts = stability_constants(loss, cset, data.n)
        cert = random_design_certificate(cert, consts, data.n, args.delta,
                                         loss.alpha)
    _write_json(args.out, cert.to_dict())
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    spec_kw = {"n": 200, "d": 2, "seed": args.seed}
    spec_kw.update(overrides.pop("spec", {}))
    spec_kw["seed"] = args.seed
    exp_kw = {"theorem": args.theorem, "reps": args.reps, "delta": args.delta,
              "spec": SyntheticSpec(**spec_kw)}
    trainer = overrides.pop("trainer", None)
    if trainer is not None:
        exp_kw["trainer"] = trainer
    for key in ("potential_kind", "potential_params", "cset_bound",
                "radius_policy", "rhos", "heldout_m", "slack"):
        if key in overrides:
            exp_kw[key] = overrides.pop(key)
            if key == "rhos":
                exp_kw[key] = tuple(exp_kw[key])
    if overrides:
        raise RejectedInputError(f"unknown config keys: {sorted(overrides)}")
    report = run_coverage(CoverageExperiment(**exp_kw))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "coverage.json", report.to_dict())
    report.write_csv(out / "replications.csv")
    band = (0.0 if report.theorem == "lemma_5_1" else
            2.0 * math.sqrt(report.target_coverage
                            * (1.0 - report.target_coverage)
                            / max(report.replications, 1)))
    lines = [
        f"theorem: {report.theorem}",
        f"delta: {report.delta}",
        f"replications completed: {report.replications}",
        f"errors: {report.errors}",
        f"successes: {report.successes}",
        f"empirical coverage: {report.empirical_coverage:.6f}",
        f"target coverage: {report.target_coverage:.6f}",
        f"allowed band below target: {band:.6f}",
        f"result: {'PASS' if report.passed else 'FAIL'}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wildbregman",
        description="Wild refitting under Bregman losses: refit, calibrate, "
                    "certify, and validate by simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a synthetic dataset + oracle files")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--design", default="fixed", choices=["fixed", "random"])
    p.add_argument("--fstar", default="linear",
                   choices=["constant", "linear", "nonlinear"])
    p.add_argument("--fstar-scale", type=float, default=0.5)
    p.add_argument("--noise", default="uniform",
                   choices=["uniform", "scaled_rademacher", "heteroskedastic"])
    p.add_argument("--noise-scale", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--potential", default="squared_l2",
                   choices=["squared_l2", "sqrt_bernoulli", "clipped_simplex_kl"])
    p.add_argument("--eps0", type=float, default=0.05)
    p.add_argument("--eta0", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("refit", help="run the wild refit on a dataset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--rho", type=float)
    group.add_argument("--target-radius", type=float)
    p.add_argument("--seed", type=int, default=0)
    _add_model_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_refit)

    p = sub.add_parser("radius", help="solve for a certified radius")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mode", required=True, choices=["fixed-point", "convex-class"])
    p.add_argument("--refit-result", required=True)
    p.add_argument("--pilot", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_radius)

    p = sub.add_parser("certify", help="assemble an excess-risk certificate")
    p.add_argument("--mode", required=True, choices=["fixed", "random"])
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--refit-result", required=True)
    p.add_argument("--radius-report", required=True)
    p.add_argument("--pilot", type=float, required=True)
    p.add_argument("--misspec", type=float, required=True)
    p.add_argument("--w-inf", type=float, default=None)
    p.add_argument("--calibration-tol", type=float, default=5e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("validate", help="Monte Carlo coverage validation")
    p.add_argument("--theorem", required=True,
                   choices=["lemma_5_1", "thm_5_1_optimism", "thm_5_1_excess",
                            "thm_6_1_rhat", "thm_5_2_excess"])
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None,
                   help="JSON file overriding experiment fields")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RejectedInputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
