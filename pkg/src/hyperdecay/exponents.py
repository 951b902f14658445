"""Weight-exponent ledgers of the alternative (frequency-weighted) approach.

Each identity I_j of the alternative derivation is weighted by
|xi|^(alpha_j) / (1+|xi|)^(alpha_j + beta_j); the alpha ledger collects the
inequalities needed near xi -> 0, the beta ledger those near xi -> infinity.
Ledgers are evaluated with exact rational arithmetic (the best choices are
all integer vectors), and every inequality carries an id documented in
data/inequality_catalog.json.

Boundary convention: the unweighted basic-energy identity has index m, so
alpha_m = beta_m = 0 wherever the families reference it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from ._parallel import pmap
from .compensator import C_FLOOR, MARGIN_TOL, CoercivityReport
from .spectral import FrequencyGrid
from .sysmodel import RelaxationSystem

__all__ = [
    "ExponentVectorsI",
    "ExponentVectorsII",
    "FeasibilityReport",
    "model1_beta_constraints",
    "model1_alpha_constraints",
    "model1_best_exponents",
    "model2_constraints",
    "model2_best_exponents",
    "component_weights",
    "lambda_from_exponents",
    "reconcile_rates",
    "alt_dissipation_check",
    "ledger_size",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    f = float(x)
    if f == int(f):
        return Fraction(int(f))
    return Fraction(f).limit_denominator(10**9)


@dataclass(frozen=True)
class ExponentVectorsI:
    """alpha_1..alpha_{m-1} and beta_1..beta_{m-1} for model one."""

    m: int
    alpha: dict[int, Fraction]
    beta: dict[int, Fraction]

    def __post_init__(self):
        for name in ("alpha", "beta"):
            vec = {j: _frac(v) for j, v in getattr(self, name).items()}
            if sorted(vec) != list(range(1, self.m)):
                raise ValueError(f"{name} must cover indices 1..{self.m - 1}")
            if any(v < 0 for v in vec.values()):
                raise ValueError(f"{name} entries must be nonnegative")
            object.__setattr__(self, name, vec)


@dataclass(frozen=True)
class ExponentVectorsII:
    """alpha_2..alpha_{2n} and beta_2..beta_{2n} for model two (alpha_1 = beta_1 = 0)."""

    m: int
    alpha: dict[int, Fraction]
    beta: dict[int, Fraction]

    def __post_init__(self):
        for name in ("alpha", "beta"):
            vec = {j: _frac(v) for j, v in getattr(self, name).items()}
            if sorted(vec) != list(range(2, self.m + 1)):
                raise ValueError(f"{name} must cover indices 2..{self.m}")
            if any(v < 0 for v in vec.values()):
                raise ValueError(f"{name} entries must be nonnegative")
            vec[1] = Fraction(0)
            object.__setattr__(self, name, vec)


@dataclass
class FeasibilityReport:
    satisfied: bool
    violations: list[tuple[str, Fraction, Fraction]] = field(default_factory=list)
    evaluated: int = 0
    ids: list[str] = field(default_factory=list)


def _evaluate(ledger: list[tuple[str, Fraction, Fraction]]) -> FeasibilityReport:
    violations = [(i, lhs, rhs) for i, lhs, rhs in ledger if lhs < rhs]
    return FeasibilityReport(
        satisfied=not violations,
        violations=violations,
        evaluated=len(ledger),
        ids=[i for i, _, _ in ledger],
    )


def _model1_beta_ledger(m: int, b: dict[int, Fraction]) -> list:
    g = lambda j: b.get(j, Fraction(0))  # beta_m := 0
    L = [
        ("b1.1", g(1) - 1, Fraction(0)),
        ("b1.2", g(1) - 2, Fraction(0)),
        ("b1.3", 2 * (g(1) - 1), (g(1) - 2) + (g(4) - 2)),
        ("b1.4", g(1) - 2, g(2)),
        ("b2.1", g(2), Fraction(0)),
        ("b2.2", g(2), g(4) - 2),
        ("b2.3", 2 * (g(2) - 1), (g(1) - 2) + (g(4) - 2)),
        ("b2.4", g(2), g(3)),
        ("b2.5", g(2), g(5)),
        ("b3.1", g(3) - 1, Fraction(0)),
        ("b3.2", g(3), Fraction(0)),
        ("b3.3", g(3) - 2, Fraction(0)),
        ("b3.4", g(3) - 2, g(4) - 2),
        ("b3.5", g(3), g(5)),
        ("b3.6", 2 * (g(3) - 1), (g(3) - 2) + (g(4) - 2)),
        ("b4.1", g(4), Fraction(1)),
        ("b4.2", g(4), Fraction(2)),
        ("b4.3", g(4), g(6)),
        ("b4.4", g(4), g(5)),
        ("b4.5", 2 * (g(4) - 2), (g(3) - 2) + (g(5) - 2)),
        ("b4.6", 2 * (g(4) - 1), g(2) + (g(5) - 2)),
    ]
    for j in range(6, m):
        L += [
            (f"bj{j}.1", g(j - 1) - 1, Fraction(0)),
            (f"bj{j}.2", g(j - 1) - 2, Fraction(0)),
            (f"bj{j}.3", g(j - 1), g(j + 1)),
            (f"bj{j}.4", g(j - 1), g(j)),
            (f"bj{j}.5", 2 * (g(j - 1) - 2), (g(j - 2) - 2) + (g(j) - 2)),
        ]
    L += [
        ("bm.1", g(m - 1) - 1, Fraction(0)),
        ("bm.2", g(m - 1) - 2, Fraction(0)),
        ("bm.3", 2 * (g(m - 1) - 1), g(m - 1) - 2),  # implied by bm.2, kept verbatim
        ("bm.4", g(m - 1) - 2, Fraction(0)),
        ("bm.5", 2 * (g(m - 1) - 2), g(m - 2) - 2),
    ]
    return L


def _model1_alpha_ledger(m: int, a: dict[int, Fraction]) -> list:
    g = lambda j: a.get(j, Fraction(0))  # alpha_m := 0
    L = [
        ("a1.1", g(1) + 1, Fraction(0)),
        ("a1.2", 2 * (g(1) + 1), (g(1) + 2) + (g(4) + 2)),
        ("a1.3", g(1) + 2, g(2)),
        ("a2.1", g(2), g(4) + 2),
        ("a2.2", 2 * (g(2) + 1), (g(1) + 2) + (g(4) + 2)),
        ("a2.3", g(2), g(3)),
        ("a2.4", g(2), g(5)),
        ("a3.1", g(3), g(4)),
        ("a3.2", g(3), g(5)),
        ("a3.3", 2 * (g(3) + 1), (g(4) + 2) + (g(1) + 2)),
        ("a4.1", g(4), g(6)),
        ("a4.2", g(4), g(5)),
        ("a4.3", 2 * (g(4) + 2), (g(3) + 2) + (g(5) + 2)),
        ("a4.4", 2 * (g(4) + 1), g(2) + (g(5) + 2)),
    ]
    for j in range(6, m):
        L += [
            (f"aj{j}.1", g(j - 1), g(j + 1)),
            (f"aj{j}.2", g(j - 1), g(j)),
            (f"aj{j}.3", 2 * (g(j - 1) + 2), (g(j - 2) + 2) + (g(j) + 2)),
        ]
    L += [
        ("am.1", g(m - 1), Fraction(0)),
        ("am.2", g(m - 1) + 2, Fraction(0)),
        ("am.3", 2 * (g(m - 1) + 2), g(m - 2) + 2),
    ]
    return L


def model1_beta_constraints(m: int, beta) -> FeasibilityReport:
    b = {j: _frac(v) for j, v in _as_indexed(beta, 1, m - 1).items()}
    return _evaluate(_model1_beta_ledger(m, b))


def model1_alpha_constraints(m: int, alpha) -> FeasibilityReport:
    a = {j: _frac(v) for j, v in _as_indexed(alpha, 1, m - 1).items()}
    return _evaluate(_model1_alpha_ledger(m, a))


def _as_indexed(vec, lo: int, hi: int) -> dict[int, Fraction]:
    if isinstance(vec, dict):
        d = {int(j): _frac(v) for j, v in vec.items()}
    else:
        d = {j: _frac(v) for j, v in zip(range(lo, hi + 1), vec)}
    if sorted(d) != list(range(lo, hi + 1)):
        raise ValueError(f"expected indices {lo}..{hi}, got {sorted(d)}")
    return d


def model1_best_exponents(m: int) -> ExponentVectorsI:
    """alpha_1..3 = 2(m-4), alpha_j = 2(m-j-1) for j >= 4; beta = (4, 2, .., 2)."""
    if m < 6 or m % 2:
        raise ValueError("model one requires even m >= 6")
    alpha = {1: Fraction(2 * (m - 4)), 2: Fraction(2 * (m - 4)), 3: Fraction(2 * (m - 4))}
    for j in range(4, m):
        alpha[j] = Fraction(2 * (m - j - 1))
    beta = {1: Fraction(4), **{j: Fraction(2) for j in range(2, m)}}
    return ExponentVectorsI(m=m, alpha=alpha, beta=beta)


def _model2_alpha_ledger(n: int, a: dict[int, Fraction]) -> list:
    g = lambda k: a.get(k, Fraction(0))
    L = [(f"A.1.{j}", 2 - j + g(2), Fraction(0)) for j in range(2, n + 1)]
    L += [
        ("A.2", g(2), Fraction(0)),
        ("A.3", g(2) + 2, Fraction(0)),
        ("A.4", g(3), Fraction(0)),
        ("A.5", 2 + g(3), 2 + g(2)),
        ("A.6", g(4), Fraction(0)),
        ("A.7", 2 + g(4), g(3)),
    ]
    for j in range(3, n + 1):
        L += [
            (f"A.8.{j}", g(2 * j), 2 + g(2 * j - 2)),
            (f"A.9.{j}", 2 + g(2 * j), g(2 * j - 1)),
            (f"A.10.{j}", g(2 * j - 1), 2 + g(2 * j - 2)),
            (f"A.11.{j}", 2 + g(2 * j - 1), g(2 * j - 3)),
        ]
    L += [(f"A.12.{j}", 2 * (3 - j + g(2)), g(2 * j) + 2) for j in range(2, n + 1)]
    L += [("A.13", 1 + g(3), (2 + g(4)) / 2)]
    for j in range(2, n):
        L += [
            (f"A.14.{j}", g(2 * j), (g(2 * j + 1) + g(2 * j - 1)) / 2 - 1),
            (f"A.15.{j}", g(2 * j + 1), (g(2 * j + 2) + g(2 * j)) / 2 - 1),
        ]
    return L


def _model2_beta_ledger(n: int, b: dict[int, Fraction]) -> list:
    g = lambda k: b.get(k, Fraction(0))
    L = [
        ("B.1", g(2) - 2, Fraction(0)),
        ("B.2", g(3), Fraction(0)),
        ("B.3", g(3) - 2, g(2) - 2),
        ("B.4", g(4), Fraction(0)),
        ("B.5", g(4) - 2, g(3)),
    ]
    for j in range(3, n + 1):
        L += [
            (f"B.6.{j}", g(2 * j), g(2 * j - 2)),
            (f"B.7.{j}", g(2 * j) - 2, g(2 * j - 1)),
            (f"B.8.{j}", g(2 * j - 1), g(2 * j - 2) - 2),
            (f"B.9.{j}", g(2 * j - 1) - 2, g(2 * j - 3)),
        ]
    L += [("B.10", 2 * (g(3) - 1), g(4) - 2)]
    L += [(f"B.11.{j}", g(2) + j - 2, Fraction(0)) for j in range(2, n + 1)]
    L += [(f"B.12.{j}", 2 * (g(2) + j - 3), g(2 * j) - 2) for j in range(2, n + 1)]
    for j in range(2, n):
        L += [
            (f"B.13.{j}", 2 * (g(2 * j) - 1), g(2 * j + 1) + g(2 * j - 1)),
            (f"B.14.{j}", 2 * (g(2 * j + 1) - 1), (g(2 * j + 2) - 2) + (g(2 * j) - 2)),
        ]
    return L


def model2_constraints(m: int, vectors: ExponentVectorsII, side: str) -> FeasibilityReport:
    n = m // 2
    if side == "alpha":
        return _evaluate(_model2_alpha_ledger(n, vectors.alpha))
    if side == "beta":
        return _evaluate(_model2_beta_ledger(n, vectors.beta))
    raise ValueError("side must be 'alpha' or 'beta'")


def model2_best_exponents(m: int) -> ExponentVectorsII:
    """alpha_2 = 4(n-2), alpha_{2j-1} = alpha_{2j} = 4(n-2) + 2(j-2);
    beta_{2j} = beta_{2j+1} = 2j."""
    if m < 6 or m % 2:
        raise ValueError("best model-two exponents are taken for even m >= 6")
    n = m // 2
    alpha = {2: Fraction(4 * (n - 2))}
    for j in range(2, n + 1):
        alpha[2 * j - 1] = alpha[2 * j] = Fraction(4 * (n - 2) + 2 * (j - 2))
    beta = {}
    for j in range(1, n + 1):
        beta[2 * j] = Fraction(2 * j)
        if 2 * j + 1 <= 2 * n:
            beta[2 * j + 1] = Fraction(2 * j)
    return ExponentVectorsII(m=m, alpha=alpha, beta=beta)


# ---------------------------------------------------------------------------
# rate envelopes
# ---------------------------------------------------------------------------


def component_weights(model_tag: str, m: int, vectors) -> list[tuple[Fraction, Fraction]]:
    """Per-component dissipation weight of the combined inequality, as
    (|xi| power, (1+|xi|) power) pairs, components 1..m."""
    if model_tag == "ModelI":
        al, be = vectors.alpha, vectors.beta
        out = [(al[2], al[2] + be[2]), (2 + al[1], al[1] + be[1]), (2 + al[3], al[3] + be[3])]
        for j in range(4, m):
            out.append((2 + al[j], al[j] + be[j]))
        out.append((Fraction(0), Fraction(0)))
        return out
    if model_tag == "ModelII":
        al, be = vectors.alpha, vectors.beta
        out = [(2 + al[2], al[2] + be[2]), (Fraction(0), Fraction(0))]
        for j in range(2, m // 2 + 1):
            out.append((al[2 * j - 1], al[2 * j - 1] + be[2 * j - 1]))
            out.append((2 + al[2 * j], al[2 * j] + be[2 * j]))
        return out
    raise ValueError("weights are defined for the builtin models only")


@dataclass(frozen=True)
class RateEnvelope:
    """Pointwise minimum of the per-component weights, with its closed form
    when a single component dominates the whole axis."""

    weights: list[tuple[Fraction, Fraction]]
    closed_form: tuple[Fraction, Fraction] | None

    def __call__(self, xi) -> np.ndarray:
        ax = np.abs(np.asarray(xi, dtype=float))
        vals = [ax ** float(p) / (1 + ax) ** float(q) for p, q in self.weights]
        return np.minimum.reduce(vals)


def lambda_from_exponents(model_tag: str, m: int, vectors, grid: FrequencyGrid) -> RateEnvelope:
    """The dissipation-rate envelope eta(xi) = min_j weight_j(xi)."""
    if model_tag == "ModelI":
        rep = model1_alpha_constraints(m, vectors.alpha)
        rep_b = model1_beta_constraints(m, vectors.beta)
    else:
        rep = model2_constraints(m, vectors, "alpha")
        rep_b = model2_constraints(m, vectors, "beta")
    if not (rep.satisfied and rep_b.satisfied):
        raise ValueError("exponent vectors violate the ledger; no rate envelope")
    weights = component_weights(model_tag, m, vectors)
    env = RateEnvelope(weights, None)
    vals = np.array([
        grid.points ** float(p) / (1 + grid.points) ** float(q) for p, q in weights
    ])
    winner = int(np.argmin(vals[:, 0]))
    if np.all(np.argmin(vals, axis=0) == winner):
        closed = weights[winner]
    else:
        closed = None
    return RateEnvelope(weights, closed)


def reconcile_rates(
    claimed_powers: tuple[int, int], envelope: RateEnvelope, grid: FrequencyGrid
) -> tuple[float, float]:
    """(min, max) over the grid of eta(xi) / lambda(xi); both finite and
    positive means the two rate normalizations agree up to bounded factors."""
    p2, q = claimed_powers
    lam = grid.points ** p2 / (1 + grid.points**2) ** q
    ratio = envelope(grid.points) / lam
    return float(ratio.min()), float(ratio.max())


# ---------------------------------------------------------------------------
# the interactive-functional dissipation check
# ---------------------------------------------------------------------------


def _eint_matrix_model1(sys, vectors, cs, xi: float) -> np.ndarray:
    m, a = sys.m, sys.params.a
    al, be = vectors.alpha, vectors.beta
    w = {j: abs(xi) ** float(al[j]) / (1 + abs(xi)) ** float(al[j] + be[j]) for j in range(1, m)}
    M = np.zeros((m, m), dtype=complex)
    M[0, 1] += cs[1] * w[1] * 1j * xi
    M[3, 0] += -cs[2] * w[2]
    M[3, 2] += cs[3] * w[3] * 1j * xi * a[4]
    M[1, 2] += -cs[3] * w[3] * a[4]
    for k in range(4, m):
        M[k, k - 1] += cs[k] * w[k] * 1j * xi * a[k + 1]
    return M


def _eint_matrix_model2(sys, vectors, cs, xi: float) -> np.ndarray:
    m, a = sys.m, sys.params.a
    n = m // 2
    al, be = vectors.alpha, vectors.beta
    w = {k: abs(xi) ** float(al[k]) / (1 + abs(xi)) ** float(al[k] + be[k]) for k in range(2, m + 1)}
    M = np.zeros((m, m), dtype=complex)
    for j in range(1, n + 1):
        prod = float(np.prod([a[2 * k] for k in range(2, j + 1)])) if j >= 2 else 1.0
        M[2 * j - 1, 0] += cs[2] * w[2] * 1j * xi * (1j * xi) ** (1 - j) / prod
    for j in range(2, n + 1):
        M[2 * j - 3, 2 * j - 2] += cs[2 * j - 1] * w[2 * j - 1]
        M[2 * j - 2, 2 * j - 1] += cs[2 * j] * w[2 * j] * 1j * xi * a[2 * j]
    return M


def _c_schedule(model_tag: str, m: int, scale: float) -> dict[int, float]:
    """Geometric interaction constants with the paired identities tied.

    Model one: 0 < c_1 << c_2 = c_3 << c_4 << .. << c_{m-1} << 1 (the tied
    pair shares the (1,3) coupling that must cancel).  Model two is reversed:
    c_1 = 1 >> c_2 = c_3 >> c_4 = c_5 >> ...
    """
    rho = 0.5
    if model_tag == "ModelI":
        expo = {1: m - 2, 2: m - 4, 3: m - 4}
        for j in range(4, m):
            expo[j] = m - 1 - j
        return {j: scale * rho ** expo[j] for j in range(1, m)}
    cs = {k: scale * rho ** (k // 2) for k in range(2, m + 1)}
    cs[1] = 1.0
    return cs


def alt_dissipation_check(
    sys: RelaxationSystem, vectors, grid: FrequencyGrid, max_halvings: int = 20
) -> CoercivityReport:
    """PSD margin of the interactive-functional Lyapunov inequality.

    Builds W4 = I + Herm(M) from the displayed E^int, requires its spectrum in
    [1/2, 3/2], and bisects the largest c with Herm(W4 (i xi A + L)) - c
    diag(weights) >= -1e-10 on the grid.  The interaction constants follow a
    geometric schedule whose scale is halved until both gates pass.
    """
    if sys.model_tag == "ModelI":
        rep_a = model1_alpha_constraints(sys.m, vectors.alpha)
        rep_b = model1_beta_constraints(sys.m, vectors.beta)
        eint = _eint_matrix_model1
    elif sys.model_tag == "ModelII":
        if sys.gamma != 1.0 or any(sys.params.a[j] != 1.0 for j in range(5, sys.m, 2)):
            raise ValueError(
                "the model-two interactive check is stated for gamma = 1 and unit odd couplings"
            )
        rep_a = model2_constraints(sys.m, vectors, "alpha")
        rep_b = model2_constraints(sys.m, vectors, "beta")
        eint = _eint_matrix_model2
    else:
        raise ValueError("interactive check exists for the builtin models only")
    if not (rep_a.satisfied and rep_b.satisfied):
        raise ValueError(f"infeasible exponent vectors: {rep_a.violations + rep_b.violations}")

    weights = component_weights(sys.model_tag, sys.m, vectors)

    def lam_diag(xi: float) -> np.ndarray:
        ax = abs(xi)
        return np.array([ax ** float(p) / (1 + ax) ** float(q) for p, q in weights])

    scale = 1.0
    eye = np.eye(sys.m)
    lam_stack = np.array([lam_diag(xi) for xi in grid.points])
    for _ in range(max_halvings + 1):
        cs = _c_schedule(sys.model_tag, sys.m, scale)

        def w4(xi: float) -> np.ndarray:
            Mm = eint(sys, vectors, cs, xi)
            return eye + (Mm + Mm.conj().T) / 2

        W = np.array(pmap(w4, grid.points))
        evals = np.linalg.eigvalsh(W)
        if evals[:, 0].min() < 0.5 or evals[:, -1].max() > 1.5:
            scale /= 2
            continue
        F = np.array(
            [Wx @ (1j * xi * sys.A + sys.L) for Wx, xi in zip(W, grid.points)]
        )
        F = (F + np.conj(np.swapaxes(F, -1, -2))) / 2

        def margins(c: float) -> np.ndarray:
            M = F - c * lam_stack[:, :, None] * eye[None, :, :]
            M = (M + np.conj(np.swapaxes(M, -1, -2))) / 2
            return np.linalg.eigvalsh(M)[:, 0]

        if margins(C_FLOOR).min() < -MARGIN_TOL:
            scale /= 2
            continue
        lo, hi = C_FLOOR, 1.0
        if margins(hi).min() >= -MARGIN_TOL:
            lo = hi
        else:
            for _ in range(40):
                mid = (lo + hi) / 2
                if margins(mid).min() >= -MARGIN_TOL:
                    lo = mid
                else:
                    hi = mid
        return CoercivityReport(c_found=lo, success=True, margins=margins(lo), failures=[])
    return CoercivityReport(
        c_found=0.0,
        success=False,
        margins=np.array([]),
        failures=["interaction-constant scaling exhausted"],
    )


def ledger_size(model_tag: str, m: int, side: str) -> int:
    """Pinned inequality counts so silent omissions fail loudly in tests."""
    if model_tag == "ModelI":
        return (26 if side == "beta" else 17) + (5 if side == "beta" else 3) * (m - 6)
    n = m // 2
    return 8 * n - 7 if side == "alpha" else 8 * n - 8
