"""Explicit compensating matrices and the coercive dissipation certificate.

For model one the construction is: constant symmetric pieces S1..S4 and the
key matrix S~ built from them, skew pieces K1, K4, K5, .., Km, the
frequency-weighted recursion calK_m, and the final weighted pair

    S(xi) = xi^(2(m-4))/(1+xi^2)^(m-3) * calS,
    K(xi) = xi^2/(1+xi^2)^(m-2) * calK_m(xi).

For model two the skew/symmetric chains calK', calS' are assembled from the
printed pieces, and the top-level functional pairing u_1 against the chain
variable U_m (whose coefficients carry powers of -i*xi) is kept as an exact
Hermitian matrix G(xi).  Dropping those phases (i.e. forcing the U_m pairing
into real symmetric pieces) leaves an un-dominated cross term against the odd
components near xi -> 0, and the dissipation bound provably fails there; see
tests for the regression pinning this.

Certification checks, per frequency, that the Hermitian dissipation form H(xi)
dominates c times the diagonal weight matrix of per-component rates, with c
found by bisection.  The small constants delta_j follow fixed-ratio geometric
schedules whose common scale is searched downward deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._parallel import pmap
from .sysmodel import (
    ConditionReport,
    ModelParamsI,
    ModelParamsII,
    RelaxationSystem,
    kernel_basis,
)
from .spectral import FrequencyGrid

__all__ = [
    "CompensatorPiecesI",
    "CompensatorPiecesII",
    "DeltaSchedule",
    "CompensatorSet",
    "CoercivityReport",
    "CoercivityError",
    "model1_pieces",
    "model1_calK",
    "model1_calK_closed",
    "model1_compensators",
    "model2_pieces",
    "model2_chain_K",
    "model2_chain_K_closed",
    "model2_chain_S",
    "model2_chain_S_closed",
    "model2_stilde_chain",
    "model2_u_row",
    "model2_phase_matrix",
    "model2_calKprime",
    "model2_calSprime_printed",
    "model2_calSprime_closed",
    "model2_compensators",
    "dissipation_matrix",
    "weight_diagonal",
    "correction_matrix",
    "delta_schedule",
    "verify_coercivity",
    "tune_deltas",
    "check_condition_k",
    "check_condition_s",
]

MARGIN_TOL = 1e-10
C_FLOOR = 1e-8
#: candidate ratios of consecutive deltas for model one (each delta small
#: relative to its successor); longer chains need the gentler ratio.  The
#: schedule search walks scales downward trying each ratio in order.
MODEL1_RATIOS = (0.8, 0.9)


def _e(m: int, i: int, j: int, v: float) -> np.ndarray:
    """Single-entry matrix, 1-based indices."""
    M = np.zeros((m, m))
    M[i - 1, j - 1] = v
    return M


def _herm(X: np.ndarray) -> np.ndarray:
    return (X + X.conj().T) / 2


def _freeze(*mats):
    for M in mats:
        M.setflags(write=False)


# ---------------------------------------------------------------------------
# model one pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompensatorPiecesI:
    m: int
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray
    S4: np.ndarray
    S_tilde: np.ndarray
    calS: np.ndarray
    K1: np.ndarray
    K4: np.ndarray
    K: dict  # K[l] for l = 5..m, the chain pieces a_l at (l-1, l)/(l, l-1)


def model1_pieces(params: ModelParamsI) -> CompensatorPiecesI:
    """Constant matrices of the model-one construction.

    S~ is assembled from S1..S3 so that its entries match the printed matrix:
    the (2,5) pair carries -a5(1-a4^2), i.e. S~ = -a5{a5(S1 + a4 S2) + (1-a4^2) S3}.
    """
    m, a = params.m, params.a
    a4, a5 = a[4], a[5]
    S1 = _e(m, 1, 4, 1) + _e(m, 4, 1, 1)
    S2 = _e(m, 2, 3, 1) + _e(m, 3, 2, 1)
    S3 = _e(m, 2, 5, 1) + _e(m, 5, 2, 1)
    S_tilde = -a5 * (a5 * (S1 + a4 * S2) + (1 - a4**2) * S3)
    S4 = -a4 * (_e(m, 2, 3, 1) + _e(m, 3, 2, 1))
    K1 = _e(m, 1, 2, -1) + _e(m, 2, 1, 1)
    K4 = a4 * (_e(m, 3, 4, 1) + _e(m, 4, 3, -1))
    K = {l: a[l] * (_e(m, l - 1, l, 1) + _e(m, l, l - 1, -1)) for l in range(5, m + 1)}
    calS = S_tilde + S4
    pieces = CompensatorPiecesI(m, S1, S2, S3, S4, S_tilde, calS, K1, K4, K)
    _freeze(S1, S2, S3, S4, S_tilde, calS, K1, K4, *K.values())
    return pieces


def model1_calK(pieces: CompensatorPiecesI, deltas: dict, xi: float) -> np.ndarray:
    """calK_m by the recursion calK_4 = d1 K1 + (1+xi^2) K4,
    calK_l = d_{l-3} xi^2 calK_{l-1} + (1+xi^2)^(l-3) K_l."""
    m = pieces.m
    if sorted(deltas) != list(range(1, m - 2)):
        raise ValueError(f"model one needs deltas 1..{m - 3}")
    x2 = xi * xi
    K = deltas[1] * pieces.K1 + (1 + x2) * pieces.K4
    for l in range(5, m + 1):
        K = deltas[l - 3] * x2 * K + (1 + x2) ** (l - 3) * pieces.K[l]
    return K


def model1_calK_closed(pieces: CompensatorPiecesI, deltas: dict, xi: float) -> np.ndarray:
    """The closed form of calK_m (sum over chain pieces with delta products)."""
    m = pieces.m
    x2 = xi * xi
    prod = float(np.prod([deltas[j] for j in range(2, m - 2)]))
    K = prod * xi ** (2 * (m - 4)) * (deltas[1] * pieces.K1 + (1 + x2) * pieces.K4)
    K = K + (1 + x2) ** (m - 3) * pieces.K[m]
    for k in range(3, m - 2):
        pk = float(np.prod([deltas[j] for j in range(k, m - 2)]))
        K = K + pk * xi ** (2 * (m - k - 2)) * (1 + x2) ** (k - 1) * pieces.K[k + 2]
    return K


# ---------------------------------------------------------------------------
# model two pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompensatorPiecesII:
    m: int
    K1: np.ndarray
    K4: np.ndarray
    S3: np.ndarray
    S_tilde: dict  # S_tilde[l]: symmetric 1-pair at (1, l), l = 2..m-1
    S: dict  # S[l+1] for l = 4,6,..,m-2: a_{l+1} at (l, l+1)/(l+1, l)
    K: dict  # K[l+2] for l = 4,6,..,m-2: a_{l+2} at (l+1, l+2)=-1, (l+2, l+1)=+1
    alpha: float  # product of the even couplings a_4 a_6 ... a_m


def model2_pieces(params: ModelParamsII) -> CompensatorPiecesII:
    m, a = params.m, params.a
    if m < 6:
        raise ValueError("the model-two construction is given for m >= 6 only")
    K1 = _e(m, 1, 2, 1) + _e(m, 2, 1, -1)
    K4 = a[4] * (_e(m, 3, 4, -1) + _e(m, 4, 3, 1))
    S3 = _e(m, 2, 3, 1) + _e(m, 3, 2, 1)
    S_tilde = {l: _e(m, 1, l, 1) + _e(m, l, 1, 1) for l in range(2, m)}
    S = {
        l + 1: a[l + 1] * (_e(m, l, l + 1, 1) + _e(m, l + 1, l, 1))
        for l in range(4, m - 1, 2)
    }
    K = {
        l + 2: a[l + 2] * (_e(m, l + 1, l + 2, -1) + _e(m, l + 2, l + 1, 1))
        for l in range(4, m - 1, 2)
    }
    alpha = float(np.prod([a[2 * j] for j in range(2, m // 2 + 1)]))
    pieces = CompensatorPiecesII(m, K1, K4, S3, S_tilde, S, K, alpha)
    _freeze(K1, K4, S3, *S_tilde.values(), *S.values(), *K.values())
    return pieces


def _check_deltas2(m: int, deltas: dict):
    if sorted(deltas) != list(range(1, m)):
        raise ValueError(f"model two needs deltas 1..{m - 1}")


def model2_chain_K(pieces: CompensatorPiecesII, deltas: dict, xi: float) -> np.ndarray:
    """calK_{m-4} by the recursion calK_0 = K_m,
    calK_l = d_{l-1} d_l xi^2 calK_{l-2} + (1+xi^2)^l K_{m-l} (even l)."""
    m = pieces.m
    _check_deltas2(m, deltas)
    x2 = xi * xi
    K = pieces.K[m]
    for l in range(2, m - 3, 2):
        piece = pieces.K4 if m - l == 4 else pieces.K[m - l]
        K = deltas[l - 1] * deltas[l] * x2 * K + (1 + x2) ** l * piece
    return K


def model2_chain_K_closed(pieces: CompensatorPiecesII, deltas: dict, xi: float) -> np.ndarray:
    m = pieces.m
    x2 = xi * xi
    K = (1 + x2) ** (m - 4) * pieces.K4
    for k in range(3, m // 2 + 1):
        pk = float(np.prod([deltas[m - 2 * j] * deltas[m - 2 * j - 1] for j in range(2, k)]))
        K = K + pk * xi ** (2 * (k - 2)) * (1 + x2) ** (m - 2 * k) * pieces.K[2 * k]
    return K


def model2_chain_S(pieces: CompensatorPiecesII, deltas: dict, xi: float) -> np.ndarray:
    """calS_{m-3} by the recursion calS_1 = S_{m-1},
    calS_l = d_{l-1} d_l xi^2 calS_{l-2} + (1+xi^2)^(l-1) S_{m-l} (odd l)."""
    m = pieces.m
    _check_deltas2(m, deltas)
    x2 = xi * xi
    S = pieces.S[m - 1]
    for l in range(3, m - 2, 2):
        piece = pieces.S3 if m - l == 3 else pieces.S[m - l]
        S = deltas[l - 1] * deltas[l] * x2 * S + (1 + x2) ** (l - 1) * piece
    return S


def model2_chain_S_closed(pieces: CompensatorPiecesII, deltas: dict, xi: float) -> np.ndarray:
    m = pieces.m
    x2 = xi * xi
    S = (1 + x2) ** (m - 4) * pieces.S3
    for k in range(3, m // 2 + 1):
        pk = float(np.prod([deltas[m - 2 * j] * deltas[m - 2 * j + 1] for j in range(2, k)]))
        S = S + pk * xi ** (2 * (k - 2)) * (1 + x2) ** (m - 2 * k) * pieces.S[2 * k - 1]
    return S


def model2_stilde_chain(params: ModelParamsII, pieces: CompensatorPiecesII, xi: float) -> np.ndarray:
    """The printed real recursion tildecalS_4 = S~_4,
    tildecalS_{2l} = a_{2l} xi tildecalS_{2l-2} + (prod a_{2j+1}) S~_{2l}."""
    a = params.a
    S = pieces.S_tilde[4]
    for l in range(3, (pieces.m - 2) // 2 + 1):
        pk = float(np.prod([a[2 * j + 1] for j in range(2, l)]))
        S = a[2 * l] * xi * S + pk * pieces.S_tilde[2 * l]
    return S


def model2_u_row(params: ModelParamsII, xi: float) -> np.ndarray:
    """Row vector T with U_m = T u, from the closed-form expansion of the
    chain variable U_m (coefficients carry powers of -i xi)."""
    m, a = params.m, params.a
    T = np.zeros(m, dtype=complex)
    for k in range(2, m // 2 + 1):
        g = float(
            np.prod([a[2 * j + 1] for j in range(2, k)])
            * np.prod([a[m - 2 * j] for j in range(0, m // 2 - k)])
        )
        T[2 * k - 1] = g * (-1j * xi) ** (m // 2 - k)
    return T


def model2_phase_matrix(params: ModelParamsII, xi: float) -> np.ndarray:
    """Hermitian G(xi) with <G u, u> = -2 Re( i^(m/2) (T u) conj(u_1) ).

    This is the exact matrix form of the functional pairing u_1 against
    i^(m/2) U_m; its real part consists of S~-pairs with xi weights and its
    imaginary part of skew (1, even) pairs.  The sign is flipped when the
    even-coupling product is negative so that the u_1 dissipation produced
    jointly with K1 stays positive.
    """
    m = params.m
    T = model2_u_row(params, xi)
    M = np.zeros((m, m), dtype=complex)
    M[0, :] = (1j) ** (m // 2) * T
    alpha = float(np.prod([params.a[2 * j] for j in range(2, m // 2 + 1)]))
    return -np.sign(alpha) * (M + M.conj().T)


def model2_calKprime(params: ModelParamsII, pieces, deltas: dict, xi: float) -> np.ndarray:
    """calK' = d_{m-2} d_{m-3} calK_{m-4} + (1+xi^2)^(m-3) K1."""
    m = params.m
    x2 = xi * xi
    return (
        deltas[m - 2] * deltas[m - 3] * model2_chain_K(pieces, deltas, xi)
        + (1 + x2) ** (m - 3) * pieces.K1
    )


def model2_calSprime_printed(
    params: ModelParamsII, pieces, deltas: dict, xi: float
) -> np.ndarray:
    """calS' with the printed real S~-recursion (kept for the closed-form
    cross-checks; certification uses the phase-faithful Hermitian variant)."""
    m = params.m
    x2 = xi * xi
    return (
        deltas[m - 2] * pieces.alpha * xi ** (m // 2 - 2) * model2_chain_S(pieces, deltas, xi)
        + (1 + x2) ** (m - 4) * model2_stilde_chain(params, pieces, xi)
    )


def model2_calSprime_closed(
    params: ModelParamsII, pieces, deltas: dict, xi: float
) -> np.ndarray:
    """Closed form of the printed calS'; the chain-S sum carries the delta
    product d_{m-2} * prod_{j=2..k-1} d_{m-2j} d_{m-2j+1}."""
    m, a = params.m, params.a
    x2 = xi * xi
    S = deltas[m - 2] * pieces.alpha * xi ** (m // 2 - 2) * (1 + x2) ** (m - 4) * pieces.S3
    for k in range(3, m // 2 + 1):
        pk = deltas[m - 2] * float(
            np.prod([deltas[m - 2 * j] * deltas[m - 2 * j + 1] for j in range(2, k)])
        )
        S = S + pieces.alpha * pk * xi ** (m // 2 + 2 * (k - 3)) * (1 + x2) ** (m - 2 * k) * pieces.S[
            2 * k - 1
        ]
    # S~ part, closed over the printed recursion
    n2 = (m - 2) // 2
    acc = float(np.prod([a[2 * j + 1] for j in range(2, n2)])) * pieces.S_tilde[m - 2] if n2 >= 3 else pieces.S_tilde[4]
    if n2 >= 3:
        acc = acc + float(np.prod([a[m - 2 * j] for j in range(1, m // 2 - 2)])) * xi ** (
            m // 2 - 3
        ) * pieces.S_tilde[4]
        for k in range(2, m // 2 - 2):
            pk = float(
                np.prod([a[2 * j + 1] for j in range(2, m // 2 - k)])
                * np.prod([a[m - 2 * j] for j in range(1, k)])
            )
            acc = acc + pk * xi ** (k - 1) * pieces.S_tilde[m - 2 * k]
    return S + (1 + x2) ** (m - 4) * acc


def model2_calSprime_hermitian(
    params: ModelParamsII, pieces, deltas: dict, xi: float
) -> np.ndarray:
    """The phase-faithful calS': chain part plus the Hermitian G(xi).

    |alpha| keeps the chain dissipation positive when the even-coupling
    product is negative (the phase matrix is sign-adjusted to match).
    """
    m = params.m
    x2 = xi * xi
    return (
        deltas[m - 2] * abs(pieces.alpha) * xi ** (m // 2 - 2) * model2_chain_S(pieces, deltas, xi)
        + (1 + x2) ** (m - 4) * model2_phase_matrix(params, xi)
    )


# ---------------------------------------------------------------------------
# schedules, weighted sets, coercivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSchedule:
    """The small constants delta_1..delta_n plus the outer scale of the
    Lyapunov correction."""

    deltas: dict
    outer: float

    def __post_init__(self):
        if any(v <= 0 for v in self.deltas.values()) or self.outer <= 0:
            raise ValueError("delta schedule must be strictly positive")

    def as_vector(self) -> list[float]:
        return [self.deltas[j] for j in sorted(self.deltas)]


#: descending common scales tried by the schedule search
SCALE_LATTICE = [2.0**-k for k in range(0, 21)]


def delta_schedule(sys: RelaxationSystem, scale: float, ratio: float = MODEL1_RATIOS[0]) -> DeltaSchedule:
    """Fixed-ratio geometric schedule at a given common scale.

    Model one: delta_j = scale * ratio^(m-2-j), j = 1..m-3 (each delta small
    relative to its successor).  Model two: equal inner deltas scale/2 for
    j = 1..m-2 and a much smaller outer delta (scale/2)^(m-1); the outer one
    must be dominated by the product of the inner ones.
    """
    m = sys.m
    if sys.model_tag == "ModelI":
        d = {j: scale * ratio ** (m - 2 - j) for j in range(1, m - 2)}
        return DeltaSchedule(deltas=d, outer=d[m - 3])
    if sys.model_tag == "ModelII":
        d = {j: scale / 2 for j in range(1, m - 1)}
        d[m - 1] = (scale / 2) ** (m - 1)
        return DeltaSchedule(deltas=d, outer=d[m - 1])
    raise ValueError("delta schedules are defined for the builtin models only")


def schedule_candidates(sys: RelaxationSystem):
    """Deterministic (scale-major) schedule lattice walked by the tuners."""
    ratios = MODEL1_RATIOS if sys.model_tag == "ModelI" else (0.5,)
    for scale in SCALE_LATTICE:
        for ratio in ratios:
            yield delta_schedule(sys, scale, ratio)


@dataclass(frozen=True)
class CompensatorSet:
    """Final frequency-dependent compensators S(xi), K(xi) plus metadata.

    weight_S / weight_K record the scalar weights as (xi power, (1+xi^2)
    power).  K is extended to negative frequencies as an odd function; on the
    positive grid it coincides with the printed weighted form.
    """

    sys: RelaxationSystem
    pieces: object
    schedule: DeltaSchedule
    weight_S: tuple[int, int]
    weight_K: tuple[int, int]
    S_of_xi: Callable[[float], np.ndarray]
    K_of_xi: Callable[[float], np.ndarray]


def model1_compensators(
    params: ModelParamsI, deltas: dict | DeltaSchedule, grid: Optional[FrequencyGrid] = None
) -> CompensatorSet:
    from .sysmodel import build_model_one

    sys = build_model_one(params)
    sched = deltas if isinstance(deltas, DeltaSchedule) else DeltaSchedule(deltas, deltas[params.m - 3])
    pieces = model1_pieces(params)
    m = params.m

    def S_of_xi(xi: float) -> np.ndarray:
        ax = abs(xi)
        return ax ** (2 * (m - 4)) / (1 + ax**2) ** (m - 3) * pieces.calS

    def K_of_xi(xi: float) -> np.ndarray:
        ax = abs(xi)
        w = ax**2 / (1 + ax**2) ** (m - 2)
        return np.sign(xi) * w * model1_calK(pieces, sched.deltas, ax)

    return CompensatorSet(
        sys=sys,
        pieces=pieces,
        schedule=sched,
        weight_S=(2 * (m - 4), m - 3),
        weight_K=(2, m - 2),
        S_of_xi=S_of_xi,
        K_of_xi=K_of_xi,
    )


def model2_compensators(
    params: ModelParamsII, deltas: dict | DeltaSchedule, grid: Optional[FrequencyGrid] = None
) -> CompensatorSet:
    from .sysmodel import build_model_two

    sys = build_model_two(params)
    sched = deltas if isinstance(deltas, DeltaSchedule) else DeltaSchedule(deltas, deltas[params.m - 1])
    pieces = model2_pieces(params)
    m = params.m

    def S_of_xi(xi: float) -> np.ndarray:
        # Hermitian; reduces to a real symmetric matrix only when the phase
        # pieces vanish.  Evaluated at signed xi (odd and even xi powers mix).
        w = xi ** (3 * (m - 4) // 2) / (1 + xi * xi) ** (2 * m - 7)
        return w * model2_calSprime_hermitian(params, pieces, sched.deltas, xi)

    def K_of_xi(xi: float) -> np.ndarray:
        ax = abs(xi)
        w = ax ** (2 * (m - 3)) / (1 + ax**2) ** (2 * (m - 3))
        return np.sign(xi) * w * model2_calKprime(params, pieces, sched.deltas, ax)

    return CompensatorSet(
        sys=sys,
        pieces=pieces,
        schedule=sched,
        weight_S=(3 * (m - 4) // 2, 2 * m - 7),
        weight_K=(2 * (m - 3), 2 * (m - 3)),
        S_of_xi=S_of_xi,
        K_of_xi=K_of_xi,
    )


def compensator_set(sys: RelaxationSystem, schedule: DeltaSchedule) -> CompensatorSet:
    if sys.model_tag == "ModelI":
        return model1_compensators(sys.params, schedule)
    if sys.model_tag == "ModelII":
        return model2_compensators(sys.params, schedule)
    raise ValueError("compensators exist for the builtin models only")


def compensator_set_to_json(cset: CompensatorSet) -> str:
    """Serialize pieces, weights, and the delta schedule."""
    import json

    pieces = {}
    for name in vars(cset.pieces):
        val = getattr(cset.pieces, name)
        if isinstance(val, np.ndarray):
            pieces[name] = val.tolist()
        elif isinstance(val, dict):
            pieces[name] = {str(k): v.tolist() for k, v in val.items()}
        elif isinstance(val, (int, float)):
            pieces[name] = val
    doc = {
        "model": cset.sys.model_tag,
        "m": cset.sys.m,
        "weight_S": {"xi_pow": cset.weight_S[0], "one_plus_xi2_pow": cset.weight_S[1]},
        "weight_K": {"xi_pow": cset.weight_K[0], "one_plus_xi2_pow": cset.weight_K[1]},
        "deltas": cset.schedule.as_vector(),
        "outer": cset.schedule.outer,
        "pieces": pieces,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def correction_matrix(cset: CompensatorSet, xi: float) -> np.ndarray:
    """Xi(xi) with W = I + outer * Xi, per the final combined identity.

    Model one: (prod_{j=2..m-3} d_j xi^(2(m-4)) (1+xi^2) calS - i xi calK_m)
    / (1+xi^2)^(m-2).  The delta product runs through m-3 so that the S4/K4
    cross terms cancel exactly, matching the stagewise combination.

    Model two: (xi^(3m/2-6) (1+xi^2) calS'_hermitian
    - i |alpha| xi^(2m-7) calK') / (1+xi^2)^(2(m-3)).
    """
    m = cset.sys.m
    d = cset.schedule.deltas
    x2 = xi * xi
    if cset.sys.model_tag == "ModelI":
        prod = float(np.prod([d[j] for j in range(2, m - 2)]))
        return (
            prod * xi ** (2 * (m - 4)) * (1 + x2) * cset.pieces.calS
            - 1j * xi * model1_calK(cset.pieces, d, xi)
        ) / (1 + x2) ** (m - 2)
    params = cset.sys.params
    Sp = model2_calSprime_hermitian(params, cset.pieces, d, xi)
    Kp = model2_calKprime(params, cset.pieces, d, xi)
    return (
        xi ** (3 * m // 2 - 6) * (1 + x2) * Sp
        - 1j * abs(cset.pieces.alpha) * xi ** (2 * m - 7) * Kp
    ) / (1 + x2) ** (2 * (m - 3))


def dissipation_matrix(cset: CompensatorSet, xi: float) -> np.ndarray:
    """The certified Hermitian form H(xi).

    Model one keeps the three printed terms (basic relaxation, weighted
    [calS L]^sy, weighted [calK_m A]^sy).  Model two needs the full
    Herm(Xi B) including the chain cross terms: the top-level U_m couplings
    cancel only against the transport part, so the three-term truncation is
    not nonnegative near xi = 0.
    """
    sys = cset.sys
    m = sys.m
    d = cset.schedule.deltas
    Lsy = (sys.L + sys.L.T) / 2
    x2 = xi * xi
    if sys.model_tag == "ModelI":
        pieces = cset.pieces
        wS = xi ** (2 * (m - 4)) / (1 + x2) ** (m - 3)
        wK = x2 / (1 + x2) ** (m - 2)
        prod = float(np.prod([d[j] for j in range(2, m - 2)]))
        outer = d[m - 3]
        H = (
            Lsy
            + outer * prod * wS * _herm(pieces.calS @ sys.L)
            + outer * wK * _herm(model1_calK(pieces, d, xi) @ sys.A)
        )
        return H
    B = 1j * xi * sys.A + sys.L
    return Lsy + d[m - 1] * _herm(correction_matrix(cset, xi) @ B)


def weight_diagonal(sys: RelaxationSystem, xi: float) -> np.ndarray:
    """Diagonal of per-component dissipation weights on the estimate's right side."""
    m = sys.m
    x2 = xi * xi
    lam = np.zeros(m)
    if sys.model_tag == "ModelI":
        lam[0] = xi ** (2 * (m - 4)) / (1 + x2) ** (m - 3)
        lam[1] = xi ** (2 * (m - 3)) / (1 + x2) ** (m - 2)
        for j in range(3, m + 1):
            lam[j - 1] = xi ** (2 * (m - j)) / (1 + x2) ** (m - j)
        return lam
    if sys.model_tag == "ModelII":
        lam[0] = xi ** (2 * (m - 3)) / (1 + x2) ** (m - 3)
        lam[1] = 1.0
        for j in range(2, m // 2 + 1):
            lam[2 * j - 2] = xi ** (2 * (m + j - 6)) / (1 + x2) ** (m + 2 * j - 7)
            lam[2 * j - 1] = xi ** (2 * (m + j - 5)) / (1 + x2) ** (m + 2 * j - 6)
        return lam
    raise ValueError("weights are defined for the builtin models only")


@dataclass
class CoercivityReport:
    c_found: float
    success: bool
    margins: np.ndarray  # min eig of H - c_found * Lambda per grid point
    failures: list = field(default_factory=list)


class CoercivityError(RuntimeError):
    def __init__(self, message: str, worst_margin: float):
        super().__init__(message)
        self.worst_margin = worst_margin


def _coercivity_stack(cset: CompensatorSet, grid: FrequencyGrid):
    H = np.array(pmap(lambda xi: dissipation_matrix(cset, xi), grid.points))
    lam = np.array([weight_diagonal(cset.sys, xi) for xi in grid.points])
    return H, lam


def _stack_margins(H: np.ndarray, lam: np.ndarray, c: float) -> np.ndarray:
    m = H.shape[-1]
    shifted = H - c * lam[:, :, None] * np.eye(m)[None, :, :]
    shifted = (shifted + np.conj(np.swapaxes(shifted, -1, -2))) / 2
    return np.linalg.eigvalsh(shifted)[:, 0]


def _coercivity_margins(cset: CompensatorSet, grid: FrequencyGrid, c: float) -> np.ndarray:
    H, lam = _coercivity_stack(cset, grid)
    return _stack_margins(H, lam, c)


def verify_coercivity(
    sys: RelaxationSystem,
    cset_or_deltas,
    grid: FrequencyGrid,
    iters: int = 40,
) -> CoercivityReport:
    """Largest c in [1e-8, 1] with H(xi) - c Lambda(xi) >= -1e-10 over the grid."""
    if isinstance(cset_or_deltas, CompensatorSet):
        cset = cset_or_deltas
    else:
        sched = (
            cset_or_deltas
            if isinstance(cset_or_deltas, DeltaSchedule)
            else DeltaSchedule(cset_or_deltas, cset_or_deltas[max(cset_or_deltas)])
        )
        cset = compensator_set(sys, sched)
    H, lam = _coercivity_stack(cset, grid)
    margins = _stack_margins(H, lam, C_FLOOR)
    if margins.min() < -MARGIN_TOL:
        bad = [float(x) for x in grid.points[margins < -MARGIN_TOL]]
        return CoercivityReport(c_found=0.0, success=False, margins=margins, failures=bad)
    lo, hi = C_FLOOR, 1.0
    if _stack_margins(H, lam, hi).min() >= -MARGIN_TOL:
        lo = hi
    else:
        for _ in range(iters):
            mid = (lo + hi) / 2
            if _stack_margins(H, lam, mid).min() >= -MARGIN_TOL:
                lo = mid
            else:
                hi = mid
    return CoercivityReport(
        c_found=lo, success=True, margins=_stack_margins(H, lam, lo), failures=[]
    )


def tune_deltas(sys: RelaxationSystem, grid: FrequencyGrid) -> DeltaSchedule:
    """First schedule on the deterministic lattice that certifies coercivity."""
    if sys.model_tag not in ("ModelI", "ModelII") or sys.m < 6:
        raise ValueError("delta tuning needs a builtin model with m >= 6")
    worst = -np.inf
    for sched in schedule_candidates(sys):
        report = verify_coercivity(sys, compensator_set(sys, sched), grid)
        if report.success:
            return sched
        worst = max(worst, float(report.margins.min()))
    raise CoercivityError(
        f"no certifying schedule found down to scale 2^-20 (worst margin {worst:.3e})",
        worst,
    )


# ---------------------------------------------------------------------------
# generic compensating-matrix condition checks
# ---------------------------------------------------------------------------


def check_condition_k(sys: RelaxationSystem, Kcand: np.ndarray) -> ConditionReport:
    """Skew compensator check at omega = +1: (K A0)^T = -K A0 and
    [K A]^sy positive definite on ker L."""
    Kcand = np.asarray(Kcand, dtype=float)
    witnesses = []
    KA0 = Kcand @ sys.A0
    witnesses.append(("K A0 skew", -float(np.abs(KA0 + KA0.T).max())))
    Q = kernel_basis(sys.L)
    if Q.shape[1] == 0:
        witnesses.append(("[KA]^sy positive on ker L", -np.inf))
    else:
        KA = (Kcand @ sys.A + (Kcand @ sys.A).T) / 2
        wmin = float(np.linalg.eigvalsh(Q.T @ KA @ Q).min())
        # strict positivity is the content; report the eigenvalue itself
        witnesses.append(("[KA]^sy positive on ker L", wmin if wmin > 0 else wmin - 1e-15))
    passed = all(v > -1e-12 for _, v in witnesses) and witnesses[1][1] > 0
    return ConditionReport("K", passed, witnesses, None)


def check_condition_s(sys: RelaxationSystem, Scand: np.ndarray) -> ConditionReport:
    """Symmetric compensator check: (S A0)^T = S A0, [SL]^sy + [L]^sy >= 0 with
    kernel equal to ker L, and i [SA]^asy >= 0 on ker [L]^sy."""
    Scand = np.asarray(Scand, dtype=float)
    witnesses = []
    SA0 = Scand @ sys.A0
    witnesses.append(("S A0 symmetric", -float(np.abs(SA0 - SA0.T).max())))
    M = (Scand @ sys.L + (Scand @ sys.L).T) / 2 + (sys.L + sys.L.T) / 2
    witnesses.append(("[SL]^sy + [L]^sy nonnegative", float(np.linalg.eigvalsh(M).min())))
    QL = kernel_basis(sys.L)
    QM = kernel_basis(M)
    same_dim = QM.shape[1] == QL.shape[1]
    if same_dim and QL.shape[1] > 0:
        gap = float(np.linalg.norm(QM @ QM.T - QL @ QL.T))
    else:
        gap = np.inf
    witnesses.append(("ker equals ker L", -gap))
    Q1 = kernel_basis((sys.L + sys.L.T) / 2)
    SA = Scand @ sys.A
    asym = (SA - SA.T) / 2
    herm_form = 1j * asym
    if Q1.shape[1] == 0:
        witnesses.append(("i[SA]^asy nonneg on ker [L]^sy", 0.0))
    else:
        witnesses.append(
            (
                "i[SA]^asy nonneg on ker [L]^sy",
                float(np.linalg.eigvalsh(Q1.T @ herm_form @ Q1).min().real),
            )
        )
    passed = all(v >= -1e-10 for _, v in witnesses)
    return ConditionReport("S", passed, witnesses, None)
