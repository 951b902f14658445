"""Batch front-end: every analysis as a subcommand with JSON config and
CSV/JSON outputs, plus rendered figures alongside the delimited data.

Exit codes: 0 success, 2 validation error, 3 certification failure,
4 numerical failure.  HYPERDECAY_THREADS caps internal parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from pathlib import Path

import numpy as np

from . import evolve, exponents, lyapunov, spectral
from .compensator import CoercivityError, compensator_set, verify_coercivity
from .report import render_figure, write_csv, write_json
from .sysmodel import (
    ModelParamsI,
    ModelParamsII,
    build_model_one,
    build_model_two,
    system_from_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CERTIFICATION = 3
EXIT_NUMERICAL = 4


class ValidationError(ValueError):
    pass


DEFAULTS = {
    "model": "model1",
    "m": 6,
    "gamma": 1.0,
    "a": None,  # all couplings 1
    "grid": {"lo": 1e-3, "hi": 1e3, "count": 601},
    "seed": 42,
    "output_dir": "out",
    "plots": True,
}


def load_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    for key in ("model", "m", "gamma", "seed", "output_dir"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "no_plots", False):
        cfg["plots"] = False
    return cfg


def build_system(cfg):
    model = cfg["model"]
    if model == "custom-file":
        path = cfg.get("system_file")
        if not path:
            raise ValidationError("custom-file model needs 'system_file' in the config")
        return system_from_json(Path(path).read_text())
    m = int(cfg["m"])
    gamma = float(cfg["gamma"])
    a = cfg.get("a")
    avec = {j: 1.0 for j in range(4, m + 1)} if a is None else {
        j: float(v) for j, v in zip(range(4, m + 1), a)
    }
    try:
        if model == "model1":
            return build_model_one(ModelParamsI(m=m, gamma=gamma, a=avec))
        if model == "model2":
            return build_model_two(ModelParamsII(m=m, gamma=gamma, a=avec))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    raise ValidationError(f"unknown model {model!r}")


def build_grid(cfg) -> spectral.FrequencyGrid:
    g = cfg.get("grid", DEFAULTS["grid"])
    try:
        return spectral.FrequencyGrid.log(float(g["lo"]), float(g["hi"]), int(g["count"]))
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad grid spec: {exc}") from exc


def cmd_spectrum(cfg) -> int:
    sys_ = build_system(cfg)
    grid = build_grid(cfg)
    out = Path(cfg["output_dir"])
    curve = spectral.spectral_abscissa_curve(sys_, grid, keep_spectra=True)
    cols = [grid.points, curve.abscissa]
    header = ["xi", "abscissa"]
    for i in range(sys_.m):
        header += [f"eta_{i + 1}_re", f"eta_{i + 1}_im"]
        cols += [curve.full_spectra[:, i].real, curve.full_spectra[:, i].imag]
    write_csv(out / "spectrum.csv", header, cols)
    fit = spectral.fit_decay_type(curve)
    write_json(
        out / "typefit.json",
        {
            "p_hat": fit.p_hat,
            "q_hat": fit.q_hat,
            "low_slope": fit.low_slope,
            "high_slope": fit.high_slope,
            "residual_low": fit.residual_low,
            "residual_high": fit.residual_high,
        },
    )
    try:
        p, q = spectral.claimed_type(sys_)
        bound = spectral.verify_type_bound(curve, p, q)
        write_json(
            out / "bound.json",
            {"p": p, "q": q, "c_est": bound.c_est, "holds": bound.holds, "violations": bound.violations},
        )
    except ValueError:
        write_json(out / "bound.json", {"note": "no claimed type for custom systems"})
    if cfg.get("plots", True):
        render_figure(
            out / "spectrum.png",
            [("-max Re eta", grid.points, -curve.abscissa)],
            "xi",
            "-spectral abscissa",
            title=f"{sys_.model_tag} m={sys_.m}",
        )
    return EXIT_OK


def cmd_certify(cfg) -> int:
    sys_ = build_system(cfg)
    if sys_.model_tag not in ("ModelI", "ModelII") or sys_.m < 6:
        raise ValidationError("unsupported: compensator construction given for m >= 6")
    grid = build_grid(cfg)
    out = Path(cfg["output_dir"])
    try:
        cert = lyapunov.pointwise_certificate(sys_, grid)
    except (CoercivityError, lyapunov.CertificateError) as exc:
        print(f"certification failed: {exc}", file=_sys.stderr)
        return EXIT_CERTIFICATION
    write_json(out / "certificate.json", json.loads(lyapunov.certificate_to_json(cert, sys_)))
    cset = compensator_set(sys_, cert.schedule)
    margins = [
        lyapunov.dissipation_margin(cset, cert.outer_delta, xi, cert.c_rate)
        for xi in grid.points
    ]
    write_csv(
        out / "margins.csv",
        ["xi", "w_min", "w_max", "d_margin"],
        [
            grid.points,
            np.array([e.w_min for e in margins]),
            np.array([e.w_max for e in margins]),
            np.array([e.d_margin for e in margins]),
        ],
    )
    co = verify_coercivity(sys_, cset, grid)
    write_csv(out / "coercivity.csv", ["xi", "margin"], [grid.points, co.margins])
    if cfg.get("plots", True):
        render_figure(
            out / "margins.png",
            [("dissipation margin", grid.points, np.array([e.d_margin for e in margins]))],
            "xi",
            "margin",
            logy=False,
            title=f"{sys_.model_tag} m={sys_.m}: certificate margins",
        )
    return EXIT_OK


def cmd_decay(cfg) -> int:
    sys_ = build_system(cfg)
    grid = build_grid(cfg)
    out = Path(cfg["output_dir"])
    d = cfg.get("decay", {})
    kind = d.get("kind", "gaussian")
    amplitude = d.get("amplitude")
    if amplitude is None:
        amplitude = [1.0] + [0.0] * (sys_.m - 1)
    try:
        spec = evolve.InitialDataSpec(
            kind=kind,
            amplitude=np.array(amplitude, dtype=float),
            sigma=float(d.get("sigma", 1.0)),
            band=tuple(d.get("band", (1.0, 2.0))),
        )
        raw_times = d.get("times", np.logspace(0, 6, 25).tolist())
        times = np.asarray(raw_times, dtype=float)
        if times.size == 0:
            raise ValidationError("empty times list")
        pairs = d.get("orders", [[0, 0]])
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc
    for k, ell in pairs:
        rep = evolve.decay_report(sys_, spec, int(k), int(ell), times, grid)
        write_csv(
            out / f"decay_k{k}_l{ell}.csv",
            ["t", "measured", "bound", "ratio"],
            [rep.times, rep.measured, rep.bound, rep.measured / rep.bound],
        )
        write_json(
            out / f"decay_k{k}_l{ell}.json",
            {"k": k, "ell": ell, "fitted_slope": rep.fitted_slope, "pass": rep.passed,
             "r1": rep.r1, "r2": rep.r2},
        )
        if cfg.get("plots", True):
            render_figure(
                out / f"decay_k{k}_l{ell}.png",
                [("measured", rep.times, rep.measured), ("bound", rep.times, rep.bound)],
                "t",
                "Sobolev norm",
                title=f"{sys_.model_tag} m={sys_.m}: decay k={k}, l={ell}",
            )
    traj = d.get("trajectory")
    if traj:
        xi = float(traj["xi"])
        u0 = evolve.synthesize_initial_data(spec, spectral.FrequencyGrid(np.array([xi])))[0]
        tr = evolve.mode_trajectory(sys_, xi, u0, times)
        mags = np.abs(tr.states)
        write_csv(
            out / "trajectory.csv",
            ["t", "norm"] + [f"u{i + 1}_abs" for i in range(sys_.m)],
            [tr.times, np.linalg.norm(tr.states, axis=1)] + [mags[:, i] for i in range(sys_.m)],
        )
    if sys_.m >= 6 and sys_.model_tag in ("ModelI", "ModelII"):
        try:
            cert = lyapunov.pointwise_certificate(sys_, grid)
        except (CoercivityError, lyapunov.CertificateError) as exc:
            print(f"certification failed: {exc}", file=_sys.stderr)
            return EXIT_CERTIFICATION
        c_est = evolve.pointwise_envelope_check(
            sys_, cert, grid, n_samples=int(d.get("samples", 3)), seed=int(cfg["seed"])
        )
        write_json(
            out / "envelope.json",
            {
                "C_est": c_est,
                "bound": cert.envelope_constant(),
                "holds": bool(c_est <= cert.envelope_constant() + 1e-9),
                "c_rate": cert.c_rate,
            },
        )
    return EXIT_OK


def cmd_exponents(cfg) -> int:
    sys_ = build_system(cfg)
    grid = build_grid(cfg)
    out = Path(cfg["output_dir"])
    e = cfg.get("exponents", {})
    m = sys_.m
    if sys_.model_tag == "ModelI":
        vectors = exponents.model1_best_exponents(m)
        if "alpha" in e or "beta" in e:
            vectors = exponents.ExponentVectorsI(
                m=m,
                alpha=dict(zip(range(1, m), e.get("alpha", [float(vectors.alpha[j]) for j in range(1, m)]))),
                beta=dict(zip(range(1, m), e.get("beta", [float(vectors.beta[j]) for j in range(1, m)]))),
            )
        rep_a = exponents.model1_alpha_constraints(m, vectors.alpha)
        rep_b = exponents.model1_beta_constraints(m, vectors.beta)
    elif sys_.model_tag == "ModelII":
        vectors = exponents.model2_best_exponents(m)
        if "alpha" in e or "beta" in e:
            vectors = exponents.ExponentVectorsII(
                m=m,
                alpha=dict(zip(range(2, m + 1), e.get("alpha", [float(vectors.alpha[j]) for j in range(2, m + 1)]))),
                beta=dict(zip(range(2, m + 1), e.get("beta", [float(vectors.beta[j]) for j in range(2, m + 1)]))),
            )
        rep_a = exponents.model2_constraints(m, vectors, "alpha")
        rep_b = exponents.model2_constraints(m, vectors, "beta")
    else:
        raise ValidationError("exponent ledgers exist for the builtin models only")
    write_json(
        out / "feasibility.json",
        {
            "alpha": {
                "satisfied": rep_a.satisfied,
                "evaluated": rep_a.evaluated,
                "violations": [[i, float(l), float(r)] for i, l, r in rep_a.violations],
            },
            "beta": {
                "satisfied": rep_b.satisfied,
                "evaluated": rep_b.evaluated,
                "violations": [[i, float(l), float(r)] for i, l, r in rep_b.violations],
            },
        },
    )
    if rep_a.satisfied and rep_b.satisfied:
        env = exponents.lambda_from_exponents(sys_.model_tag, m, vectors, grid)
        p2, q = spectral.claimed_rate_powers(sys_)
        lam = grid.points**p2 / (1 + grid.points**2) ** q
        eta = env(grid.points)
        lo, hi = exponents.reconcile_rates((p2, q), env, grid)
        write_csv(out / "rates.csv", ["xi", "eta", "lambda", "ratio"], [grid.points, eta, lam, eta / lam])
        write_json(
            out / "reconcile.json",
            {"lo": lo, "hi": hi, "eta_closed_form": [
                [float(p), float(q_)] for p, q_ in ([env.closed_form] if env.closed_form else [])
            ]},
        )
        if cfg.get("plots", True):
            render_figure(
                out / "rates.png",
                [("eta (weighted combination)", grid.points, eta), ("lambda (pointwise rate)", grid.points, lam)],
                "xi",
                "rate",
                title=f"{sys_.model_tag} m={m}: rate functions",
            )
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hyperdecay",
        description="dissipative-structure analyses for two hyperbolic relaxation models",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--model", choices=["model1", "model2", "custom-file"])
    parser.add_argument("--m", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--no-plots", action="store_true")
    parser.add_argument(
        "command", choices=["spectrum", "certify", "decay", "exponents"], help="analysis to run"
    )
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        np.random.seed(int(cfg["seed"]))
        handler = {
            "spectrum": cmd_spectrum,
            "certify": cmd_certify,
            "decay": cmd_decay,
            "exponents": cmd_exponents,
        }[args.command]
        return handler(cfg)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION
    except (CoercivityError, lyapunov.CertificateError) as exc:
        print(f"certification failure: {exc}", file=_sys.stderr)
        return EXIT_CERTIFICATION
    except (np.linalg.LinAlgError, spectral.EigensolverError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
