"""Characteristic roots over frequency grids, spectral abscissa, and type fitting.

The mode system is u_t = -(i xi A + L) u after Fourier transform; the
characteristic roots eta(i xi) solve det(eta A0 + i xi A + L) = 0, so with
A0 = I they are the eigenvalues of -(i xi A + L).  The spectral abscissa
max Re eta tends to zero at both ends of the frequency axis for these
models; where its magnitude falls below what LAPACK can resolve in double
precision (roughly 1e-13 in absolute terms), the point is re-solved with
mpmath's arbitrary-precision Hessenberg/QR eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import pmap
from .sysmodel import RelaxationSystem

__all__ = [
    "FrequencyGrid",
    "SpectralCurve",
    "DecayTypeFit",
    "TypeBoundResult",
    "EigensolverError",
    "default_grid",
    "mode_matrix",
    "eigenvalues_at",
    "spectral_abscissa_curve",
    "fit_decay_type",
    "verify_type_bound",
    "claimed_type",
    "claimed_rate_powers",
]

#: below this absolute size a double-precision real part is treated as noise
_DOUBLE_FLOOR = 1e-12


class EigensolverError(RuntimeError):
    def __init__(self, xi: float, message: str):
        super().__init__(f"eigensolver failed at xi={xi:g}: {message}")
        self.xi = xi


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequencies, by default log-spaced."""

    points: np.ndarray
    design: str = "explicit"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if not (np.all(pts > 0) and np.all(np.diff(pts) > 0)):
            raise ValueError("grid points must be positive and strictly increasing")
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)

    @classmethod
    def log(cls, lo: float = 1e-3, hi: float = 1e3, count: int = 601) -> "FrequencyGrid":
        if not (0 < lo < hi) or count < 2:
            raise ValueError("need 0 < lo < hi and count >= 2")
        return cls(np.logspace(np.log10(lo), np.log10(hi), count), design=f"log({lo:g},{hi:g},{count})")

    def __len__(self) -> int:
        return self.points.size


def default_grid() -> FrequencyGrid:
    return FrequencyGrid.log(1e-3, 1e3, 601)


def mode_matrix(sys: RelaxationSystem, xi: float) -> np.ndarray:
    """(A0)^-1 (i xi A + L); the mode evolves by u_t = -mode_matrix u."""
    B = 1j * xi * sys.A + sys.L
    if np.array_equal(sys.A0, np.eye(sys.m)):
        return B
    return np.linalg.solve(sys.A0, B)


def _sort_eta(eta: np.ndarray) -> np.ndarray:
    order = np.lexsort((eta.imag, -eta.real))
    return eta[order]


def eigenvalues_at(sys: RelaxationSystem, xi: float) -> np.ndarray:
    """The m characteristic roots eta at frequency xi, sorted by (-Re, +Im)."""
    try:
        eta = np.linalg.eigvals(-mode_matrix(sys, xi))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise EigensolverError(xi, str(exc)) from exc
    return _sort_eta(eta)


def _eigenvalues_mp(sys: RelaxationSystem, xi: float, dps: int) -> np.ndarray:
    import mpmath as mp

    B = -mode_matrix(sys, xi)
    with mp.workdps(dps):
        M = mp.matrix([[mp.mpc(B[i, j]) for j in range(sys.m)] for i in range(sys.m)])
        try:
            ev = mp.eig(M, left=False, right=False)
        except Exception as exc:  # mp.eig raises plain Exception on stall
            raise EigensolverError(xi, f"mpmath: {exc}") from exc
        return _sort_eta(np.array([complex(e) for e in ev]))


def _abscissa_point(sys: RelaxationSystem, xi: float) -> float:
    """max Re eta at xi, escalating precision until the sign is resolved."""
    absc = float(eigenvalues_at(sys, xi).real.max())
    if abs(absc) > _DOUBLE_FLOOR:
        return absc
    # expected magnitude ~ xi^(2p); size the precision from the worst exponent
    need = int(np.ceil(2 * sys.m * abs(np.log10(max(xi, 1e-12))))) + 25
    for dps in (max(40, need), max(80, 2 * need)):
        absc = float(_eigenvalues_mp(sys, xi, dps).real.max())
        if abs(absc) > 10.0 ** (-(dps - 10)):
            return absc
    return absc


@dataclass(frozen=True)
class SpectralCurve:
    grid: FrequencyGrid
    abscissa: np.ndarray
    full_spectra: Optional[np.ndarray] = None  # shape (len(grid), m)


_CURVE_CACHE: dict[tuple, SpectralCurve] = {}


def _cache_key(sys: RelaxationSystem, grid: FrequencyGrid):
    return (sys.A.tobytes(), sys.L.tobytes(), grid.points.tobytes())


def batch_eigenvalues(sys: RelaxationSystem, grid: FrequencyGrid) -> np.ndarray:
    """All characteristic roots over the grid in one stacked solve (double
    precision only; low-frequency real parts may be below roundoff)."""
    stack = np.array([-mode_matrix(sys, x) for x in grid.points])
    try:
        eta = np.linalg.eigvals(stack)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverError(float("nan"), str(exc)) from exc
    order = np.lexsort((eta.imag, -eta.real), axis=-1)
    return np.take_along_axis(eta, order, axis=-1)


def spectral_abscissa_curve(
    sys: RelaxationSystem, grid: FrequencyGrid, keep_spectra: bool = False
) -> SpectralCurve:
    """Per-frequency spectral abscissa.

    The double-precision batch solve covers the whole grid; points whose
    largest real part cannot be distinguished from zero are re-solved at
    higher precision.
    """
    key = _cache_key(sys, grid)
    hit = _CURVE_CACHE.get(key)
    if hit is not None and (not keep_spectra or hit.full_spectra is not None):
        return hit
    spectra = batch_eigenvalues(sys, grid)
    absc = spectra.real.max(axis=-1)
    needs = np.where(np.abs(absc) <= _DOUBLE_FLOOR)[0]
    refined = pmap(lambda i: _abscissa_point(sys, float(grid.points[i])), needs)
    for i, val in zip(needs, refined):
        absc[i] = val
    curve = SpectralCurve(grid, absc, spectra if keep_spectra else None)
    _CURVE_CACHE[key] = curve
    return curve


@dataclass(frozen=True)
class DecayTypeFit:
    p_hat: float
    q_hat: float
    low_slope: float
    high_slope: float
    residual_low: float
    residual_high: float


def fit_decay_type(
    curve: SpectralCurve, low_cut: float = 1e-2, high_cut: float = 1e2
) -> DecayTypeFit:
    """Least-squares log-log slopes of -abscissa at both ends of the grid.

    As xi -> 0 the slope approaches 2p; as xi -> infinity it approaches
    2p - 2q, which fixes (p_hat, q_hat).
    """
    xs = curve.grid.points
    fits = {}
    for name, mask in (("low", xs <= low_cut), ("high", xs >= high_cut)):
        if int(mask.sum()) < 8:
            raise ValueError(f"{name} window has fewer than 8 grid points")
        a = curve.abscissa[mask]
        if np.any(a >= 0):
            raise ValueError(f"nonnegative abscissa inside the {name} window")
        lx, ly = np.log(xs[mask]), np.log(-a)
        slope, intercept = np.polyfit(lx, ly, 1)
        rms = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
        fits[name] = (float(slope), rms)
    low_slope, res_low = fits["low"]
    high_slope, res_high = fits["high"]
    return DecayTypeFit(
        p_hat=low_slope / 2,
        q_hat=(low_slope - high_slope) / 2,
        low_slope=low_slope,
        high_slope=high_slope,
        residual_low=res_low,
        residual_high=res_high,
    )


@dataclass(frozen=True)
class TypeBoundResult:
    p: float
    q: float
    c_est: float
    holds: bool
    violations: list  # frequencies where the ratio is nonpositive


def verify_type_bound(curve: SpectralCurve, p: float, q: float) -> TypeBoundResult:
    """Largest c with Re eta <= -c xi^(2p) / (1+xi^2)^q over the whole grid."""
    xs = curve.grid.points
    ratio = (-curve.abscissa) * (1 + xs**2) ** q / xs ** (2 * p)
    c_est = float(ratio.min())
    violations = [float(x) for x in xs[ratio <= 0]]
    return TypeBoundResult(p=p, q=q, c_est=c_est, holds=c_est > 0, violations=violations)


def claimed_type(sys: RelaxationSystem) -> tuple[float, float]:
    """The dissipativity type (p, q) each model family is built to satisfy."""
    if sys.model_tag == "ModelI":
        return float(sys.m - 3), float(sys.m - 2)
    if sys.model_tag == "ModelII":
        return (3 * sys.m - 10) / 2.0, float(2 * (sys.m - 3))
    raise ValueError("claimed types are defined for the two builtin models only")


def claimed_rate_powers(sys: RelaxationSystem) -> tuple[int, int]:
    """(xi power, (1+xi^2) power) of the pointwise rate lambda(xi)."""
    if sys.model_tag == "ModelI":
        return 2 * (sys.m - 3), sys.m - 2
    if sys.model_tag == "ModelII":
        return 3 * sys.m - 10, 2 * (sys.m - 3)
    raise ValueError("rate profiles are defined for the two builtin models only")
