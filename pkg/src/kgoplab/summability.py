"""Mollifiers, Fejér means and the derived norms built from the gamma action."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.integrate

from .operators import (
    ConvolutionOp,
    GammaConjugation,
    Identity,
    LinearOperator,
    Product,
    Sum,
    TranslationOp,
    TranslationSum,
)
from .space import GridSpec, LatticeSpec, WeightSpec

__all__ = [
    "bump",
    "MollifierFamily",
    "FejerKernel",
    "cesaro_mean",
    "fejer_mean_values",
    "operator_derivative",
    "lipschitz_seminorm",
    "default_shift_samples",
    "ck_norm",
    "DerivedNorms",
    "derived_norms",
    "mollifier_approximation",
    "write_convergence_csv",
]


def bump(r2: np.ndarray) -> np.ndarray:
    """``exp(1 / (r^2 - 1))`` inside the unit ball, 0 outside; argument is ``r^2``."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros(r2.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
    return out


@lru_cache(maxsize=8)
def _bump_mass(dim: int) -> float:
    """``int_{R^n} bump`` by radial quadrature."""
    surface = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    val, _ = scipy.integrate.quad(lambda r: bump(r * r) * r ** (dim - 1), 0.0, 1.0, limit=200)
    return surface * val


@dataclass(frozen=True)
class MollifierFamily:
    """``f_k(p) = k^n f(k p)`` for the unit-mass bump ``f`` supported in the unit ball."""

    dim: int = 1

    def __call__(self, k: float, *coords: np.ndarray) -> np.ndarray:
        """Continuum values ``f_k`` at the given coordinates."""
        r2 = sum((k * np.asarray(c, dtype=float)) ** 2 for c in coords)
        return k**self.dim * bump(r2) / _bump_mass(self.dim)

    def kernel(self, grid: GridSpec, k: float) -> np.ndarray:
        """Samples of ``f_k`` on ``grid`` rescaled so that ``sum f_k h^n = 1``."""
        if grid.dim != self.dim:
            raise ValueError("grid dimension does not match the family")
        vals = self(k, *grid.mesh())
        mass = float(np.sum(vals)) * grid.cell_volume
        if mass == 0.0:
            raise ValueError(f"support radius 1/{k} is below the grid spacing {grid.spacing}")
        return vals / mass

    def operator(self, grid: GridSpec, k: float) -> ConvolutionOp:
        return ConvolutionOp(grid, self.kernel(grid, k), tag=f"mollifier:{k!r}")

    def transform(self, k: float, *coords: np.ndarray, order: int = 64) -> np.ndarray:
        """``F_k(p) = int f_k(t) exp(-i p.t) dt`` by Gauss-Legendre quadrature in each axis.

        The quadrature weights are rescaled to unit mass, so ``F_k(0) = 1``.
        """
        nodes, weights = np.polynomial.legendre.leggauss(order)
        nodes = nodes / k
        weights = weights / k
        mesh = np.meshgrid(*([nodes] * self.dim), indexing="ij")
        wmesh = np.prod(np.meshgrid(*([weights] * self.dim), indexing="ij"), axis=0)
        fw = (self(k, *mesh) * wmesh).ravel()
        fw = fw / np.sum(fw)
        pts = [m.ravel() for m in mesh]
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = np.zeros(np.broadcast(*coords).shape, dtype=complex)
        for j in range(fw.size):
            if fw[j] != 0:
                out += fw[j] * np.exp(-1j * sum(c * t[j] for c, t in zip(coords, pts)))
        return out


@dataclass(frozen=True)
class FejerKernel:
    """Product Fejér kernel ``K_N(t) = sum_{|m_i| <= N} prod_i (1 - |m_i|/(N+1)) exp(i m.t)``."""

    order: int
    dim: int = 1

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"order must be nonnegative, got {self.order}")

    def coefficient(self, m) -> float:
        m = np.atleast_1d(np.asarray(m))
        return float(np.prod(np.clip(1.0 - np.abs(m) / (self.order + 1), 0.0, None)))

    def coefficients_on(self, *coords: np.ndarray) -> np.ndarray:
        out = np.ones(np.broadcast(*coords).shape)
        for c in coords:
            out = out * np.clip(1.0 - np.abs(c) / (self.order + 1), 0.0, None)
        return out

    def __call__(self, *t: np.ndarray) -> np.ndarray:
        """Kernel values; uses the closed form ``sin^2((N+1)t/2) / ((N+1) sin^2(t/2))``."""
        n1 = self.order + 1
        out = 1.0
        for ti in t:
            ti = np.asarray(ti, dtype=float)
            s = np.sin(ti / 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.where(np.abs(s) < 1e-12, float(n1), np.sin(n1 * ti / 2) ** 2 / (n1 * s * s))
            out = out * val
        return out

    def integral(self) -> float:
        """``int_{T^n} K_N``: only the zero mode survives, giving ``(2 pi)^n``."""
        return (2 * math.pi) ** self.dim * self.coefficient(np.zeros(self.dim))


def _lattice_factor(kernel: FejerKernel, steps: Sequence[int]) -> float:
    return kernel.coefficient(np.asarray(steps))


def cesaro_mean(op: LinearOperator, order: int, method: str = "auto") -> LinearOperator:
    """``tau_N(A) = (2 pi)^{-n} int gamma_t(A) K_N(t) dt`` on the torus model.

    Parameters
    ----------
    op : LinearOperator
        Operator on a :class:`LatticeSpec`.
    order : int
        Fejér order ``N >= 0``.
    method : {'auto', 'exact', 'quadrature'}
        ``exact`` multiplies the coefficient of each ``T_m`` by the Fejér
        weight; it applies to translations, translation sums and lattice
        convolutions.  ``quadrature`` uses the ``2N+2``-point trapezoid per
        axis, exact for every ``T_m`` with ``|m_i| <= N + 1`` and aliased
        beyond.  ``auto`` prefers ``exact``.
    """
    if order < 0:
        raise ValueError(f"Fejér order must be nonnegative, got {order}")
    grid = op.grid
    if not isinstance(grid, LatticeSpec):
        raise TypeError("Cesàro means are defined on the lattice model")
    kern = FejerKernel(order, grid.dim)
    exact_ok = isinstance(op, (Identity, TranslationOp, TranslationSum, ConvolutionOp))
    if method == "exact" and not exact_ok:
        raise TypeError(f"no exact Fejér rule for {type(op).__name__}")
    if method in ("auto", "exact") and exact_ok:
        if isinstance(op, Identity):
            return Identity(grid)
        if isinstance(op, TranslationOp):
            return TranslationSum(grid, [(_lattice_factor(kern, op.steps), op.a)])
        if isinstance(op, TranslationSum):
            return op.reweighted(lambda s: _lattice_factor(kern, s))
        factor = kern.coefficients_on(*op.kernel_grid.mesh())
        return op.with_kernel(op.kernel * factor, tag=f"fejer:{order}:{op.tag}")
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    points = 2 * order + 2
    t1 = 2 * math.pi * np.arange(points) / points
    mesh = np.meshgrid(*([t1] * grid.dim), indexing="ij")
    weights = kern(*mesh) / points**grid.dim
    terms = [(wt, GammaConjugation(np.array([m.flat[j] for m in mesh]), op)) for j, wt in enumerate(weights.ravel())]
    return Sum(terms)


def fejer_mean_values(values: np.ndarray, order: int) -> np.ndarray:
    """Classical Fejér mean of periodic samples on a uniform mesh of ``[-pi, pi)^n``.

    Discrete circular convolution ``(1/P)^n sum_j g(x - t_j) K_N(t_j)``, exact
    for trigonometric polynomials of degree below ``P - N``.
    """
    values = np.asarray(values, dtype=complex)
    dim = values.ndim
    p = values.shape[0]
    kern = FejerKernel(order, dim)
    t1 = 2 * math.pi * np.arange(p) / p
    kvals = kern(*np.meshgrid(*([t1] * dim), indexing="ij"))
    axes = tuple(range(dim))
    # index j of kvals is t_j = 2 pi j / P, the mesh step, so a circular sum aligns x_i - t_j
    spectrum = np.fft.fftn(kvals, axes=axes) * np.fft.fftn(values, axes=axes)
    return np.fft.ifftn(spectrum, axes=axes) / p**dim


def operator_derivative(
    op: LinearOperator,
    axis: int = 0,
    method: str = "richardson",
    step: float = 1e-2,
    levels: int = 4,
) -> LinearOperator:
    """``D_i A = lim (gamma_{t e_i}(A) - A) / t``.

    Parameters
    ----------
    op : LinearOperator
    axis : int
        Zero-based coordinate.
    method : {'richardson', 'exact'}
        ``richardson`` extrapolates forward differences at ``t, t/2, ...``
        (``levels`` of them); the result is the corresponding fixed linear
        combination of the operators ``gamma_{t_j}(A)``.  ``exact`` uses the
        closed forms ``D_i K_f = K_{-i p_i f}`` and ``D_i T_b = -i b_i T_b``.
    """
    grid = op.grid
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range")
    if method == "exact":
        if isinstance(op, Identity):
            return Sum([(0.0, op)])
        if isinstance(op, ConvolutionOp):
            p = op.kernel_grid.mesh()[axis]
            return op.with_kernel(-1j * p * op.kernel, tag=f"D{axis}:{op.tag}")
        if isinstance(op, TranslationOp):
            return TranslationSum(grid, [(-1j * op.a[axis], op.a)])
        if isinstance(op, TranslationSum):
            return TranslationSum(
                grid, [(-1j * a[axis] * c, a) for a, c in zip(op.shifts, op.coefficients)]
            )
        raise TypeError(f"no closed-form derivative for {type(op).__name__}")
    if method != "richardson":
        raise ValueError(f"unknown method {method!r}")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    steps = [step / 2**j for j in range(levels)]
    # tableau on coefficient vectors: row j holds the weights of D(t_j)
    table = [np.eye(levels)[j] for j in range(levels)]
    for k in range(1, levels):
        table = [(2**k * table[j + 1] - table[j]) / (2**k - 1) for j in range(len(table) - 1)]
    weights = table[0]
    terms = []
    total = 0.0
    for wj, tj in zip(weights, steps):
        a = np.zeros(grid.dim)
        a[axis] = tj
        terms.append((wj / tj, GammaConjugation(a, op)))
        total += wj / tj
    terms.append((-total, op))
    return Sum(terms)


def default_shift_samples(dim: int) -> list[np.ndarray]:
    """Shifts ``+-2^j e_i`` for ``j = -6..2``."""
    out = []
    for i in range(dim):
        for j in range(-6, 3):
            for sign in (1.0, -1.0):
                a = np.zeros(dim)
                a[i] = sign * 2.0**j
                out.append(a)
    return out


def _default_norm(weight: Optional[WeightSpec]) -> Callable[[LinearOperator], float]:
    from .spectral import operator_norm

    def norm(op):
        return operator_norm(op, weight=weight, method="auto").value

    return norm


def lipschitz_seminorm(
    op: LinearOperator,
    shift_samples: Optional[Sequence] = None,
    weight: Optional[WeightSpec] = None,
    norm: Optional[Callable[[LinearOperator], float]] = None,
) -> float:
    """``max_a ||gamma_a(A) - A|| / |a|`` over the sample shifts.

    This is a lower bound for the supremum over all shifts.
    """
    samples = default_shift_samples(op.grid.dim) if shift_samples is None else list(shift_samples)
    if not samples:
        raise ValueError("shift sample set is empty")
    norm = _default_norm(weight) if norm is None else norm
    best = 0.0
    for a in samples:
        a = np.atleast_1d(np.asarray(a, dtype=float))
        size = float(np.linalg.norm(a))
        if size == 0.0:
            raise ValueError("shift samples must be nonzero")
        best = max(best, norm(GammaConjugation(a, op) - op) / size)
    return best


def ck_norm(
    op: LinearOperator,
    k: int,
    weight: Optional[WeightSpec] = None,
    method: str = "exact",
    norm: Optional[Callable[[LinearOperator], float]] = None,
) -> float:
    """``||A||_k = max(||A||, ||D_1 A||_{k-1}, ..., ||D_n A||_{k-1})``, ``||A||_0 = ||A||``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    norm = _default_norm(weight) if norm is None else norm
    value = norm(op)
    if k == 0:
        return value
    for i in range(op.grid.dim):
        value = max(value, ck_norm(operator_derivative(op, i, method=method), k - 1, weight, method, norm))
    return value


@dataclass(frozen=True)
class DerivedNorms:
    """Operator norm, ``C^k`` norms and the sampled Lipschitz seminorm."""

    opnorm: float
    ck: dict = field(default_factory=dict)
    lip: float = 0.0


def derived_norms(
    op: LinearOperator,
    max_k: int = 1,
    weight: Optional[WeightSpec] = None,
    method: str = "exact",
    shift_samples: Optional[Sequence] = None,
) -> DerivedNorms:
    norm = _default_norm(weight)
    ck = {k: ck_norm(op, k, weight, method, norm) for k in range(1, max_k + 1)}
    return DerivedNorms(norm(op), ck, lipschitz_seminorm(op, shift_samples, weight, norm))


def mollifier_approximation(
    op: LinearOperator,
    j: float,
    k: float,
    order: int = 32,
    family: Optional[MollifierFamily] = None,
) -> LinearOperator:
    """``A_j = int f_j(p) gamma_p(K_{f_k} A) dp`` by Gauss-Legendre quadrature.

    Nodes fill ``[-1/j, 1/j]^n`` (the support of ``f_j``) with ``order``
    points per axis.  As ``j`` grows, ``A_j -> K_{f_k} A`` strongly.
    """
    grid = op.grid
    family = MollifierFamily(grid.dim) if family is None else family
    base = Product(family.operator(grid, k), op)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = nodes / j
    weights = weights / j
    mesh = np.meshgrid(*([nodes] * grid.dim), indexing="ij")
    wmesh = np.prod(np.meshgrid(*([weights] * grid.dim), indexing="ij"), axis=0)
    fvals = family(j, *mesh) * wmesh
    # unit discrete mass, so that A_j -> K_{f_k} A without a quadrature-mass floor
    fvals = fvals / np.sum(fvals)
    terms = []
    for idx in np.ndindex(*fvals.shape):
        if fvals[idx] != 0:
            a = np.array([m[idx] for m in mesh])
            terms.append((fvals[idx], GammaConjugation(a, base)))
    return Sum(terms)


def write_convergence_csv(rows: Sequence[tuple], path, header: Sequence[str] = ("N", "error")) -> None:
    """Write a convergence table with ``repr`` floats for exact round trips."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
