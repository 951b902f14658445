"""Coefficient matrices for the two relaxation models and structural condition checks.

Both models are linear symmetric hyperbolic systems u_t + A u_x + L u = 0 on the
line, with A real symmetric and L degenerately dissipative (nontrivial kernel,
nonnegative symmetric part).  Model one is the Timoshenko/Cattaneo family
(phase dimension m >= 6, even); model two couples a damped oscillator chain
through skew off-diagonal relaxation (m >= 4, even).

Indices in documentation and reports are 1-based, matching the component
numbering u_1..u_m; storage is plain 0-based numpy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "ModelParamsI",
    "ModelParamsII",
    "RelaxationSystem",
    "Projections",
    "ConditionReport",
    "build_model_one",
    "build_model_two",
    "decompose_sym_asym",
    "kernel_projections",
    "check_condition_a0",
    "check_condition_a",
    "system_to_json",
    "system_from_json",
    "energy_rate_vector",
]

#: relative singular-value threshold for kernel detection
KERNEL_RTOL = 1e-10


def _check_a_vector(a, m: int) -> dict[int, float]:
    """Normalize couplings to a dict {j: a_j} for j = 4..m, rejecting zeros."""
    if isinstance(a, dict):
        vals = {int(j): float(a[j]) for j in sorted(a)}
    else:
        vals = {j: float(v) for j, v in zip(range(4, m + 1), a)}
    expected = list(range(4, m + 1))
    if sorted(vals) != expected:
        raise ValueError(f"couplings must cover indices 4..{m}, got {sorted(vals)}")
    for j, v in vals.items():
        if v == 0.0:
            raise ValueError(f"coupling a_{j} must be nonzero")
    return vals


@dataclass(frozen=True)
class ModelParamsI:
    """Parameters of model one: even m >= 6, damping gamma > 0, couplings a_4..a_m."""

    m: int
    gamma: float = 1.0
    a: dict[int, float] = None

    def __post_init__(self):
        if self.m < 6 or self.m % 2 != 0:
            raise ValueError(f"model one requires even m >= 6, got m={self.m}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        a = self.a if self.a is not None else {j: 1.0 for j in range(4, self.m + 1)}
        object.__setattr__(self, "a", _check_a_vector(a, self.m))


@dataclass(frozen=True)
class ModelParamsII:
    """Parameters of model two: even m >= 4.

    m = 4 is admitted for spectral analysis only; the compensator machinery
    requires m >= 6.
    """

    m: int
    gamma: float = 1.0
    a: dict[int, float] = None

    def __post_init__(self):
        if self.m < 4 or self.m % 2 != 0:
            raise ValueError(f"model two requires even m >= 4, got m={self.m}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        a = self.a if self.a is not None else {j: 1.0 for j in range(4, self.m + 1)}
        object.__setattr__(self, "a", _check_a_vector(a, self.m))


@dataclass(frozen=True)
class RelaxationSystem:
    """The triple (A0, A, L) together with dimension and model metadata."""

    m: int
    A0: np.ndarray
    A: np.ndarray
    L: np.ndarray
    model_tag: str  # "ModelI" | "ModelII" | "Custom"
    params: object = None

    def __post_init__(self):
        for name in ("A0", "A", "L"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.shape != (self.m, self.m):
                raise ValueError(f"{name} must be {self.m}x{self.m}")
            object.__setattr__(self, name, M)
            M.setflags(write=False)
        if not np.array_equal(self.A, self.A.T):
            raise ValueError("A must be symmetric (exact entrywise equality)")
        w0 = np.linalg.eigvalsh(self.A0)
        if not np.array_equal(self.A0, self.A0.T) or w0.min() <= 0:
            raise ValueError("A0 must be symmetric positive definite")
        lsy = (self.L + self.L.T) / 2
        if np.linalg.eigvalsh(lsy).min() < -1e-12:
            raise ValueError("symmetric part of L must be nonnegative definite")
        k = kernel_dimension(self.L)
        if not 1 <= k <= self.m - 1:
            raise ValueError(f"L must be degenerately dissipative; dim ker L = {k}")

    @property
    def gamma(self) -> float:
        return float(self.params.gamma) if self.params is not None else float("nan")


def build_model_one(params: ModelParamsI) -> RelaxationSystem:
    """Assemble (I, A, L) for model one.

    A has the coupling chain 1-2, 3-4 (a_4), 4-5 (a_5), ..., (m-1)-m (a_m);
    L has the skew relaxation pair at (1,4)/(4,1) and the damping gamma at (m,m).
    """
    m, a = params.m, params.a
    A = np.zeros((m, m))
    L = np.zeros((m, m))
    A[0, 1] = A[1, 0] = 1.0
    A[2, 3] = A[3, 2] = a[4]
    for j in range(4, m):  # pairs (j, j+1) carrying a_{j+1}, 1-based
        A[j - 1, j] = A[j, j - 1] = a[j + 1]
    L[0, 3] = 1.0
    L[3, 0] = -1.0
    L[m - 1, m - 1] = params.gamma
    return RelaxationSystem(m=m, A0=np.eye(m), A=A, L=L, model_tag="ModelI", params=params)


def build_model_two(params: ModelParamsII) -> RelaxationSystem:
    """Assemble (I, A, L) for model two.

    A couples the pairs (2j-1, 2j) with a_{2j}; L has the damped block
    [[gamma, 1], [-1, 0]] on components 2..3 and skew pairs (2j, 2j+1)
    carrying a_{2j+1} below it.
    """
    m, a = params.m, params.a
    A = np.zeros((m, m))
    L = np.zeros((m, m))
    A[0, 1] = A[1, 0] = 1.0
    for j in range(2, m // 2 + 1):
        A[2 * j - 2, 2 * j - 1] = A[2 * j - 1, 2 * j - 2] = a[2 * j]
    L[1, 1] = params.gamma
    L[1, 2] = 1.0
    L[2, 1] = -1.0
    for j in range(2, (m - 2) // 2 + 1):
        L[2 * j - 1, 2 * j] = a[2 * j + 1]
        L[2 * j, 2 * j - 1] = -a[2 * j + 1]
    return RelaxationSystem(m=m, A0=np.eye(m), A=A, L=L, model_tag="ModelII", params=params)


def decompose_sym_asym(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a square matrix into symmetric and skew-symmetric parts."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("expected a square matrix")
    return (X + X.T) / 2, (X - X.T) / 2


def kernel_dimension(M: np.ndarray, rtol: float = KERNEL_RTOL) -> int:
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return M.shape[0]
    return int(np.sum(s <= rtol * s[0]))


def kernel_basis(M: np.ndarray, rtol: float = KERNEL_RTOL) -> np.ndarray:
    """Orthonormal basis of ker M (columns), by SVD thresholding."""
    M = np.asarray(M, dtype=float)
    _, s, vt = np.linalg.svd(M)
    if s.size and s[0] > 0:
        rank = int(np.sum(s > rtol * s[0]))
    else:
        rank = 0
    return vt[rank:].T


@dataclass(frozen=True)
class Projections:
    """Orthogonal projections onto ker L (P) and ker of the symmetric part (P1)."""

    P: np.ndarray
    P1: np.ndarray


def kernel_projections(sys: RelaxationSystem) -> Projections:
    QL = kernel_basis(sys.L)
    QS = kernel_basis((sys.L + sys.L.T) / 2)
    return Projections(P=QL @ QL.T, P1=QS @ QS.T)


@dataclass
class ConditionReport:
    """Outcome of one structural condition with per-clause numeric margins."""

    condition_id: str
    passed: bool
    witnesses: list[tuple[str, float]] = field(default_factory=list)
    counterexample: Optional[tuple[int, int]] = None

    def margin(self, description: str) -> float:
        for d, v in self.witnesses:
            if d == description:
                return v
        raise KeyError(description)


_TOL = 1e-12


def _structure_witnesses(sys: RelaxationSystem) -> list[tuple[str, float]]:
    w = []
    w.append(("A0 symmetric", -float(np.abs(sys.A0 - sys.A0.T).max())))
    w.append(("A0 positive definite", float(np.linalg.eigvalsh(sys.A0).min())))
    w.append(("A symmetric", -float(np.abs(sys.A - sys.A.T).max())))
    w.append(("ker L nontrivial", float(kernel_dimension(sys.L) - 1)))
    return w


def check_condition_a0(sys: RelaxationSystem) -> ConditionReport:
    """Classical structure: A0 SPD, A symmetric, L itself symmetric nonnegative."""
    witnesses = _structure_witnesses(sys)
    asym = np.abs(sys.L - sys.L.T)
    witnesses.append(("L symmetric", -float(asym.max())))
    witnesses.append(("L nonnegative", float(np.linalg.eigvalsh((sys.L + sys.L.T) / 2).min())))
    counterexample = None
    if asym.max() > _TOL:
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        counterexample = (int(i) + 1, int(j) + 1)
    passed = all(v >= -_TOL for _, v in witnesses)
    return ConditionReport("A0", passed, witnesses, counterexample)


def check_condition_a(sys: RelaxationSystem) -> ConditionReport:
    """Relaxed structure: L need not be symmetric, only its symmetric part >= 0."""
    witnesses = _structure_witnesses(sys)
    witnesses.append(
        ("sym part of L nonnegative", float(np.linalg.eigvalsh((sys.L + sys.L.T) / 2).min()))
    )
    passed = all(v >= -_TOL for _, v in witnesses)
    return ConditionReport("A", passed, witnesses, None)


def energy_rate_vector(sys: RelaxationSystem, z: np.ndarray, xi: float) -> float:
    """Re <(i xi A + L) z, z>, the instantaneous energy dissipation of a mode."""
    B = 1j * xi * sys.A + sys.L
    return float(np.real(np.vdot(z, B @ z)))


def system_to_json(sys: RelaxationSystem) -> str:
    """Serialize to the interchange document used by the CLI."""
    doc = {
        "model": sys.model_tag,
        "m": sys.m,
        "gamma": sys.gamma if sys.params is not None else None,
        "a": [sys.params.a[j] for j in range(4, sys.m + 1)] if sys.params is not None else None,
        "A0": sys.A0.tolist(),
        "A": sys.A.tolist(),
        "L": sys.L.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def system_from_json(text: str) -> RelaxationSystem:
    doc = json.loads(text)
    m = int(doc["m"])
    params = None
    if doc.get("gamma") is not None and doc.get("a") is not None:
        a = {j: float(v) for j, v in zip(range(4, m + 1), doc["a"])}
        cls = {"ModelI": ModelParamsI, "ModelII": ModelParamsII}.get(doc["model"])
        if cls is not None:
            params = cls(m=m, gamma=float(doc["gamma"]), a=a)
    return RelaxationSystem(
        m=m,
        A0=np.array(doc["A0"], dtype=float),
        A=np.array(doc["A"], dtype=float),
        L=np.array(doc["L"], dtype=float),
        model_tag=doc["model"],
        params=params,
    )
