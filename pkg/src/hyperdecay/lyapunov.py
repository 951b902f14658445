"""Frequency-weighted Lyapunov matrices and the pointwise-decay certificate.

W(xi) = I + outer * Xi(xi) with Xi the weighted compensator correction.  Along
the mode flow u' = -(i xi A + L) u one has d/dt <W u, u> = -2 <Herm(W B) u, u>,
so a nonnegative minimum eigenvalue of Herm(W B) - c lambda(xi) W certifies

    |u(t)|^2 <= (C_equiv / c_equiv) exp(-2 c lambda(xi) t) |u(0)|^2

with c_equiv I <= W <= C_equiv I.  The certificate search walks the same
deterministic schedule lattice as the coercivity tuner and keeps the first
schedule satisfying both the coercive estimate and this full dissipation
inequality (the latter also controls the cross terms of the combined identity,
so it can need a smaller scale than coercivity alone).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._parallel import pmap
from .compensator import (
    MARGIN_TOL,
    CompensatorSet,
    DeltaSchedule,
    compensator_set,
    correction_matrix,
    schedule_candidates,
    verify_coercivity,
)
from .spectral import FrequencyGrid, spectral_abscissa_curve, claimed_rate_powers
from .sysmodel import RelaxationSystem

__all__ = [
    "LyapunovCertificate",
    "EnergyMargin",
    "CertificateError",
    "lyapunov_matrix",
    "equivalence_bounds",
    "dissipation_margin",
    "rate_lambda",
    "pointwise_certificate",
    "certificate_to_json",
]


class CertificateError(RuntimeError):
    def __init__(self, stage: str, message: str, worst_xi: float = float("nan")):
        super().__init__(f"certificate stage '{stage}' failed: {message}")
        self.stage = stage
        self.worst_xi = worst_xi


def lyapunov_matrix(cset: CompensatorSet, outer_delta: float, xi: float) -> np.ndarray:
    """W(xi) = I + outer_delta * Xi(xi); Hermitian by construction."""
    return np.eye(cset.sys.m) + outer_delta * correction_matrix(cset, xi)


def rate_lambda(sys: RelaxationSystem, xi: float) -> float:
    p2, q = claimed_rate_powers(sys)
    return float(abs(xi) ** p2 / (1 + xi * xi) ** q)


def _w_extremes(cset: CompensatorSet, outer: float, grid: FrequencyGrid):
    stack = np.array(pmap(lambda xi: lyapunov_matrix(cset, outer, xi), grid.points))
    stack = (stack + np.conj(np.swapaxes(stack, -1, -2))) / 2
    w = np.linalg.eigvalsh(stack)
    return w[:, 0], w[:, -1]


def equivalence_bounds(
    cset: CompensatorSet, outer_delta: float, grid: FrequencyGrid, max_halvings: int = 20
):
    """Halve the outer delta until min eig W >= 1/2 on the grid; return
    (c_equiv, C_equiv, outer_delta_used)."""
    outer = outer_delta
    for _ in range(max_halvings + 1):
        lo, hi = _w_extremes(cset, outer, grid)
        if lo.min() >= 0.5:
            return float(lo.min()), float(hi.max()), outer
        outer /= 2
    raise CertificateError("equivalence", f"W not uniformly definite after {max_halvings} halvings")


@dataclass(frozen=True)
class EnergyMargin:
    xi: float
    w_min: float
    w_max: float
    d_margin: float


def dissipation_margin(
    cset: CompensatorSet, outer_delta: float, xi: float, c_rate: float
) -> EnergyMargin:
    """Minimum eigenvalue of Herm(W (i xi A + L)) - c_rate lambda(xi) W at one xi."""
    sys = cset.sys
    B = 1j * xi * sys.A + sys.L
    W = lyapunov_matrix(cset, outer_delta, xi)
    Wh = (W + W.conj().T) / 2
    form = (W @ B + (W @ B).conj().T) / 2 - c_rate * rate_lambda(sys, xi) * Wh
    wvals = np.linalg.eigvalsh(Wh)
    return EnergyMargin(
        xi=float(xi),
        w_min=float(wvals[0]),
        w_max=float(wvals[-1]),
        d_margin=float(np.linalg.eigvalsh((form + form.conj().T) / 2)[0]),
    )


def _margin_stack(cset, outer, grid):
    """Per-frequency (Herm(W B), lambda W) pairs for the rate bisection."""
    sys = cset.sys

    def point(xi):
        B = 1j * xi * sys.A + sys.L
        W = lyapunov_matrix(cset, outer, xi)
        return (W @ B + (W @ B).conj().T) / 2, rate_lambda(sys, xi) * (W + W.conj().T) / 2

    pairs = pmap(point, grid.points)
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def _stack_worst(F, G, c_rate) -> float:
    M = F - c_rate * G
    M = (M + np.conj(np.swapaxes(M, -1, -2))) / 2
    return float(np.linalg.eigvalsh(M)[:, 0].min())


def _bisect_rate(cset, outer, grid, iters: int = 40) -> float:
    """Largest c with all margins >= -MARGIN_TOL; negative if even c=0 fails."""
    F, G = _margin_stack(cset, outer, grid)
    if _stack_worst(F, G, 0.0) < -MARGIN_TOL:
        return -1.0
    lo, hi = 0.0, 1.0
    if _stack_worst(F, G, hi) >= -MARGIN_TOL:
        return hi
    for _ in range(iters):
        mid = (lo + hi) / 2
        if _stack_worst(F, G, mid) >= -MARGIN_TOL:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class LyapunovCertificate:
    model_tag: str
    m: int
    schedule: DeltaSchedule
    outer_delta: float
    lambda_powers: tuple[int, int]  # (xi power, (1+xi^2) power)
    c_equiv: float
    C_equiv: float
    c_rate: float
    coercivity_c: float

    def envelope_constant(self) -> float:
        return float(np.sqrt(self.C_equiv / self.c_equiv))


def pointwise_certificate(sys: RelaxationSystem, grid: FrequencyGrid) -> LyapunovCertificate:
    """Full pipeline: schedule search -> compensators -> equivalence -> rate.

    Walks the scale lattice; a schedule qualifies when the coercive estimate
    certifies (c >= 1e-8) and the Lyapunov dissipation margin is nonnegative
    for some positive rate.
    """
    if sys.model_tag not in ("ModelI", "ModelII") or sys.m < 6:
        raise CertificateError("validate", "certificates need a builtin model with m >= 6")
    last_fail = "schedule lattice exhausted"
    for sched in schedule_candidates(sys):
        scale = max(sched.deltas.values())
        cset = compensator_set(sys, sched)
        coercivity = verify_coercivity(sys, cset, grid)
        if not coercivity.success:
            last_fail = f"coercivity infeasible at scale {scale:g}"
            continue
        c_eq, C_eq, outer = equivalence_bounds(cset, sched.outer, grid)
        c_rate = _bisect_rate(cset, outer, grid)
        if c_rate <= 0.0:
            last_fail = f"dissipation margin negative at scale {scale:g}"
            continue
        return LyapunovCertificate(
            model_tag=sys.model_tag,
            m=sys.m,
            schedule=sched,
            outer_delta=outer,
            lambda_powers=claimed_rate_powers(sys),
            c_equiv=c_eq,
            C_equiv=C_eq,
            c_rate=c_rate,
            coercivity_c=coercivity.c_found,
        )
    raise CertificateError("schedule-search", last_fail)


def spectral_consistency_gap(
    sys: RelaxationSystem, cert: LyapunovCertificate, grid: FrequencyGrid
) -> float:
    """min over the grid of (-abscissa)/lambda minus c_rate; nonnegative means
    the certified rate does not beat the spectral abscissa anywhere."""
    curve = spectral_abscissa_curve(sys, grid)
    lam = np.array([rate_lambda(sys, x) for x in grid.points])
    return float((-curve.abscissa / lam).min() - cert.c_rate)


def certificate_to_json(cert: LyapunovCertificate, sys: RelaxationSystem) -> str:
    doc = {
        "model": cert.model_tag,
        "m": cert.m,
        "params": {
            "gamma": sys.gamma,
            "a": [sys.params.a[j] for j in range(4, sys.m + 1)],
        },
        "deltas": cert.schedule.as_vector(),
        "outer_delta": cert.outer_delta,
        "lambda": {"p2": cert.lambda_powers[0], "q": cert.lambda_powers[1]},
        "c_equiv": cert.c_equiv,
        "C_equiv": cert.C_equiv,
        "c_rate": cert.c_rate,
        "coercivity_c": cert.coercivity_c,
    }
    return json.dumps(doc, indent=2, sort_keys=True)
