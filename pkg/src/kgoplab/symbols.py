"""The symbol map and what is built on it.

The symbol of a translation-commuting operator ``A`` is the function ``g`` with
``F^{-1} A F = M_g`` on the position side.  With the transform convention of
:mod:`kgoplab.space`, ``sigma(T_a) = exp(i a.x)`` and
``sigma(K_f)(x) = int f(p) exp(i p.x) dp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .operators import (
    ConvolutionOp,
    LinearOperator,
    TranslationOp,
    kernel_grid,
)
from .space import (
    GridSpec,
    LatticeSpec,
    StateVector,
    WeightSpec,
    _to_momentum_array,
    _to_position_array,
    weight_values,
)

__all__ = [
    "NotAMultiplierError",
    "BandLimitError",
    "SymbolFunction",
    "TorusSymbol",
    "symbol_of",
    "torus_symbol",
    "gelfand_evaluation",
    "band_limited_symbol",
    "kernel_from_symbol",
    "inverse_symbol",
    "BoundEstimate",
    "lemma36_bound",
    "IntervalTable",
    "interval_counterexample",
    "SupportReport",
    "support_preservation_check",
    "ideal_membership",
    "sup_norm_oversampled",
]


class NotAMultiplierError(ValueError):
    """The operator does not act as a multiplier on the position side."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


class BandLimitError(ValueError):
    """The symbol's transform is not supported in the declared box."""


@dataclass
class SymbolFunction:
    """Samples of a symbol on the position grid.

    Attributes
    ----------
    grid : GridSpec
        Position grid.
    values : ndarray
        Samples; meaningful only where ``mask`` is True.
    mask : ndarray of bool
        Points where the symbol was determined.
    band_radius : float or None
        Half-width of a box containing the support of the transform, when
        the symbol is declared band-limited.
    residual : float
        Largest relative multiplier-consistency residual over the probes
        (0 for symbols constructed directly).
    """

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray
    band_radius: Optional[float] = None
    residual: float = 0.0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values[self.mask]), initial=0.0))

    def points(self) -> np.ndarray:
        return self.grid.points()[self.mask.ravel()]

    def on_mask(self) -> np.ndarray:
        return self.values[self.mask]

    def max_deviation(self, other) -> float:
        """``max |self - other|`` over the common mask; ``other`` may be a callable."""
        if callable(other):
            ref = np.broadcast_to(other(*self.grid.mesh()), self.grid.shape)
            return float(np.max(np.abs(self.values - ref)[self.mask], initial=0.0))
        common = self.mask & other.mask
        return float(np.max(np.abs(self.values - other.values)[common], initial=0.0))


def _window_mask(position: GridSpec, window) -> tuple[np.ndarray, list]:
    if window is None:
        window = 0.5 * position.radius
    if np.isscalar(window):
        bounds = [(-float(window), float(window))] * position.dim
    elif np.isscalar(window[0]):
        bounds = [(float(window[0]), float(window[1]))]
    else:
        bounds = [(float(lo), float(hi)) for lo, hi in window]
    if len(bounds) != position.dim:
        raise ValueError(f"window needs {position.dim} intervals, got {len(bounds)}")
    mask = np.ones(position.shape, dtype=bool)
    for (lo, hi), c in zip(bounds, position.mesh()):
        mask &= (c >= lo) & (c <= hi)
    return mask, bounds


def symbol_of(
    op: LinearOperator,
    window=None,
    width: Optional[float] = None,
    rel_tol: float = 1e-8,
) -> SymbolFunction:
    """Read the multiplier of ``op`` off its action on localized probes.

    Position-side Gaussians ``psi_c`` of width ``s`` are centered on a mesh
    of spacing ``s`` covering ``window``.  With ``B = F^{-1} A F``, the
    symbol is the pointwise least-squares fit

    ``g = sum_c conj(psi_c) B psi_c / sum_c |psi_c|^2``

    and every probe must satisfy ``||B psi_c - g psi_c|| <= rel_tol ||psi_c||``
    on the window.

    Parameters
    ----------
    op : LinearOperator
        Operator on a momentum grid; lattice operators go through
        :func:`torus_symbol`.
    window : float or sequence of (lo, hi), optional
        Position region where the symbol is read; half the position box by
        default.
    width : float, optional
        Probe width; ``12 / R`` by default so that probes are well resolved
        in momentum.
    rel_tol : float

    Raises
    ------
    NotAMultiplierError
        If some probe violates the consistency bound.
    """
    grid = op.grid
    if isinstance(grid, LatticeSpec):
        return torus_symbol(op).sample()
    position = grid.dual()
    mask, bounds = _window_mask(position, window)
    s = 12.0 / grid.radius if width is None else float(width)
    axes = [np.arange(lo, hi + 0.5 * s, s) for lo, hi in bounds]
    centers = np.stack([c.ravel() for c in np.meshgrid(*axes, indexing="ij")], axis=1)
    coords = position.mesh()
    num = np.zeros(grid.shape, dtype=complex)
    den = np.zeros(grid.shape)
    probes = []
    for c in centers:
        sq = sum((x - ci) ** 2 for x, ci in zip(coords, c))
        psi = np.exp(-sq / (2 * s * s)).astype(complex)
        out = _to_position_array(op._apply(_to_momentum_array(psi, grid)), grid)
        num += np.conj(psi) * out
        den += np.abs(psi) ** 2
        probes.append((psi, out))
    valid = mask & (den > 0)
    g = np.zeros(grid.shape, dtype=complex)
    g[valid] = num[valid] / den[valid]
    worst = 0.0
    for psi, out in probes:
        ref = math.sqrt(float(np.sum(np.abs(psi[valid]) ** 2)))
        if ref < 1e-3 * math.sqrt(float(np.sum(np.abs(psi) ** 2))):
            continue
        res = math.sqrt(float(np.sum(np.abs(out[valid] - g[valid] * psi[valid]) ** 2)))
        worst = max(worst, res / ref)
    if worst > rel_tol:
        raise NotAMultiplierError("operator does not act as a multiplier on the probes", worst)
    return SymbolFunction(position, g, valid, residual=worst)


@dataclass
class TorusSymbol:
    """Trigonometric polynomial ``sum_m c_m exp(i m.x)`` from a lattice operator."""

    lattice: LatticeSpec
    coefficients: np.ndarray

    def __call__(self, x) -> complex:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ph = sum(xi * ci for xi, ci in zip(x, self.lattice.mesh()))
        return complex(np.sum(self.coefficients * np.exp(1j * ph)))

    def evaluate(self, *coords: np.ndarray) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = np.zeros(np.broadcast(*coords).shape, dtype=complex)
        for m, c in zip(self.lattice.points(), self.coefficients.ravel()):
            if c != 0:
                out += c * np.exp(1j * sum(mi * xi for mi, xi in zip(m, coords)))
        return out

    def sample(self, points: Optional[int] = None) -> SymbolFunction:
        """Values on a uniform periodic mesh of ``[-pi, pi)^n``."""
        p = 4 * self.lattice.cutoff + 4 if points is None else int(points)
        if p % 2 == 0:
            p += 1
        k = p // 2
        dx = 2 * math.pi / p
        mesh = GridSpec(self.lattice.dim, dx, dx * k)
        vals = self.evaluate(*mesh.mesh())
        return SymbolFunction(mesh, vals, np.ones(mesh.shape, dtype=bool))

    def sup_norm(self, points: Optional[int] = None) -> float:
        return self.sample(points).sup_norm()


def torus_symbol(op: LinearOperator, check: bool = True, rel_tol: float = 1e-10) -> TorusSymbol:
    """Symbol of a lattice operator from its column at the origin.

    ``A delta_0 = sum_m c_m delta_m`` gives ``sigma(A) = sum_m c_m exp(i m.x)``.
    With ``check`` the column at each unit vector must be the shifted column
    wherever both are defined, which is the commutation with ``T_{e_i}``.
    """
    lattice = op.grid
    if not isinstance(lattice, LatticeSpec):
        raise TypeError("torus_symbol needs an operator on a LatticeSpec")
    delta = np.zeros(lattice.shape, dtype=complex)
    origin = lattice.index_of(np.zeros(lattice.dim))
    delta[origin] = 1.0
    col0 = op._apply(delta)
    if check:
        scale = max(float(np.max(np.abs(col0))), 1e-300)
        for i in range(lattice.dim):
            e = np.zeros(lattice.dim)
            e[i] = 1.0
            t = TranslationOp(lattice, e)
            moved = op._apply(t._apply(delta))
            shifted = t._apply(col0)
            inside = t._apply(np.ones(lattice.shape)) != 0
            res = float(np.max(np.abs(moved - shifted)[inside])) / scale
            if res > rel_tol:
                raise NotAMultiplierError("lattice operator does not commute with unit translations", res)
    return TorusSymbol(lattice, col0)


def gelfand_evaluation(op: LinearOperator, x) -> complex:
    """Character ``A -> sigma(A)(x)`` of the torus-model algebra."""
    return torus_symbol(op, check=False)(x)


def kernel_from_symbol(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Kernel samples ``f`` on ``grid`` whose discrete symbol is ``values``.

    Inverts ``g(x) = h^n sum_p f(p) exp(i p.x) = (2 pi)^{n/2} F^{-1} f``.
    """
    return _to_momentum_array(np.asarray(values, dtype=complex), grid) / (2 * math.pi) ** (grid.dim / 2)


def _symbol_from_kernel(kernel: np.ndarray, grid: GridSpec) -> np.ndarray:
    return (2 * math.pi) ** (grid.dim / 2) * _to_position_array(kernel, grid)


def band_limited_symbol(grid: GridSpec, transform: Callable, band_radius: float) -> SymbolFunction:
    """Symbol ``g(x) = int f(p) exp(i p.x) dp`` for ``f`` supported in ``[-B, B]^n``.

    ``transform`` is evaluated on the momentum grid and must vanish outside
    the box; ``B`` must fit inside the grid.
    """
    if not 0 < band_radius <= grid.radius:
        raise BandLimitError(f"band radius {band_radius} does not fit in the grid radius {grid.radius}")
    f = np.broadcast_to(transform(*grid.mesh()), grid.shape).astype(complex)
    _check_band(f, grid, band_radius)
    position = grid.dual()
    return SymbolFunction(
        position, _symbol_from_kernel(f, grid), np.ones(position.shape, dtype=bool), band_radius=band_radius
    )


def _check_band(f: np.ndarray, grid: GridSpec, band_radius: float, tol: float = 1e-10) -> None:
    outside = np.zeros(grid.shape, dtype=bool)
    for c in grid.mesh():
        outside |= np.abs(c) > band_radius + 1e-9 * grid.spacing
    peak = float(np.max(np.abs(f)))
    leak = float(np.max(np.abs(f[outside]), initial=0.0))
    if peak > 0 and leak > tol * peak:
        raise BandLimitError(f"transform leaks outside [-{band_radius}, {band_radius}]: {leak / peak:.3e}")


def inverse_symbol(g: SymbolFunction, momentum_grid: Optional[GridSpec] = None) -> ConvolutionOp:
    """Convolution operator ``K_f`` with ``sigma(K_f) = g`` for band-limited ``g``.

    Raises
    ------
    BandLimitError
        If ``g`` carries no band radius, or its transform leaks outside it.
    """
    if g.band_radius is None:
        raise BandLimitError("symbol is not declared band-limited")
    if not g.mask.all():
        raise BandLimitError("symbol must be sampled on the whole position grid")
    if momentum_grid is None:
        h = 2 * math.pi / (g.grid.points_per_axis * g.grid.spacing)
        momentum_grid = GridSpec(g.grid.dim, h, h * g.grid.n_side)
    f = kernel_from_symbol(g.values, momentum_grid)
    _check_band(f, momentum_grid, g.band_radius)
    # lift to the doubled offset range so the box edge does not truncate
    big = np.zeros(kernel_grid(momentum_grid).shape, dtype=complex)
    k = momentum_grid.n_side
    big[(slice(k, 3 * k + 1),) * momentum_grid.dim] = f
    return ConvolutionOp(momentum_grid, big, tag=f"band-limited:{g.band_radius!r}")


def sup_norm_oversampled(kernel: np.ndarray, grid: GridSpec, factor: int = 4) -> float:
    """``max |g|`` for the symbol of a kernel on ``grid``, on a position mesh ``factor`` times finer.

    Zero-padding the kernel in momentum refines the position mesh, which
    tightens the sampled supremum of a band-limited symbol.
    """
    pad_grid = GridSpec(grid.dim, grid.spacing, grid.spacing * (factor * (2 * grid.n_side + 1) // 2))
    big = np.zeros(pad_grid.shape, dtype=complex)
    lo = pad_grid.n_side - grid.n_side
    big[(slice(lo, lo + grid.points_per_axis),) * grid.dim] = kernel
    return float(np.max(np.abs(_symbol_from_kernel(big, pad_grid))))


@dataclass(frozen=True)
class BoundEstimate:
    """Quadrature value of the weighted-L^1 norm bound for a convolution kernel.

    ``diverged`` is set when the outermost shell of the offset grid carries
    more than ``1e-6`` of the total, a sign that the sum has not converged.
    """

    value: float
    diverged: bool
    tail_fraction: float


def lemma36_bound(kernel: np.ndarray, grid: GridSpec, mass: float = 1.0, shell: float = 0.9) -> BoundEstimate:
    """``sum_q (1 + |q|/m + |q|^2/m^2)^{1/4} |f(q)| h^n`` over the kernel offsets.

    Since ``E(p - q)/E(p) <= 1 + |q|/m + |q|^2/m^2``, the Schur test shows this
    bounds the weighted norm of the discrete ``K_f`` exactly on the grid.

    Parameters
    ----------
    kernel : ndarray
        Kernel samples, on ``grid`` or on its doubled offset range.
    grid : GridSpec
        Momentum grid of the operator.
    mass : float
    shell : float
        Points with ``|q|_inf > shell * (kernel radius)`` form the outer shell
        used for the divergence flag.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    kernel = np.asarray(kernel)
    op = ConvolutionOp(grid, kernel)
    offsets = op.kernel_grid
    coords = offsets.mesh()
    r = np.sqrt(sum(c * c for c in coords))
    weight = (1.0 + r / mass + (r / mass) ** 2) ** 0.25
    terms = weight * np.abs(kernel) * grid.cell_volume
    total = float(np.sum(terms))
    outer = np.zeros(offsets.shape, dtype=bool)
    for c in coords:
        outer |= np.abs(c) > shell * offsets.radius
    tail = float(np.sum(terms[outer])) / total if total > 0 else 0.0
    return BoundEstimate(total, tail > 1e-6 or not math.isfinite(total), tail)


@dataclass(frozen=True)
class IntervalTable:
    """Growth table of the spaced-interval construction."""

    ladder: tuple[int, ...]
    harmonic: tuple[float, ...]
    ratios: tuple[float, ...]
    parameters: dict

    def slope(self, start: int = 0) -> float:
        x = np.log(np.asarray(self.harmonic[start:]))
        y = np.log(np.asarray(self.ratios[start:]))
        return float(np.polyfit(x, y, 1)[0])

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.ratios) > 0))


def _interval_transform(lo: float, hi: float) -> Callable:
    """``(2 pi)^{-1} int_lo^hi exp(-i p x) dx``: decays like ``1/p``."""

    def f(p):
        out = np.empty(p.shape, dtype=complex)
        zero = p == 0
        pz = p[~zero]
        out[~zero] = (np.exp(-1j * pz * lo) - np.exp(-1j * pz * hi)) / (2j * math.pi * pz)
        out[zero] = (hi - lo) / (2 * math.pi)
        return out

    return f


def interval_counterexample(
    ladder: Sequence[int] = (64, 256, 1024, 4096),
    interval: tuple[float, float] = (0.0, 1.0),
    length: float = 0.25,
    spacing: float = 2 * math.pi,
    offset: float = math.pi,
    h: float = 0.05,
    mass: float = 1.0,
    margin: float = 20.0,
) -> IntervalTable:
    """Norm ratios ``||K_f phi_N||_r / ||phi_N||_r`` for spaced indicator states.

    ``phi_N`` is the indicator of the intervals ``[j a + c, j a + c + b]``,
    ``j = 1..N``, and ``f`` is the transform of the indicator of ``J``.
    Each interval contributes about ``b |f(j a)|`` near the origin with a
    common phase, so the output there grows like the harmonic number while
    ``||phi_N||_r^2`` grows like it too; the ratio grows like ``sqrt(H_N)``.

    Parameters
    ----------
    ladder : sequence of int
    interval : (lo, hi)
        The interval ``J``.
    length : float
        Interval length ``b``.
    spacing : float
        Distance ``a`` between consecutive intervals.
    offset : float
        Offset ``c`` of the first interval from ``j a``.
    h, mass, margin : float
        Grid spacing, mass, and extra box room beyond the last interval.

    Raises
    ------
    ValueError
        Outside the safe range: ``a |J|`` must be a multiple of ``2 pi``
        (so every interval sees the same phase of ``f``), that common phase
        must keep ``|1 - exp(-i c |J|)| >= 1``, and ``b |J| <= pi/2`` with
        ``0 < b <= a/4`` so that phase is nearly constant across an interval.
    """
    lo, hi = map(float, interval)
    width = hi - lo
    if not width > 0:
        raise ValueError("interval must have positive length")
    turns = spacing * width / (2 * math.pi)
    if abs(turns - round(turns)) > 1e-9 or round(turns) < 1:
        raise ValueError("spacing * |J| must be a positive multiple of 2 pi")
    if abs(1 - np.exp(-1j * offset * width)) < 1.0:
        raise ValueError("offset puts the intervals near zeros of the kernel tail")
    if not (0 < length <= spacing / 4) or length * width > math.pi / 2:
        raise ValueError("interval length b outside the safe range")
    if any(int(n) < 1 for n in ladder):
        raise ValueError("ladder entries must be positive")
    f = _interval_transform(lo, hi)
    weight = WeightSpec.relativistic(mass)
    ratios, harm = [], []
    for n in ladder:
        n = int(n)
        k = int(math.ceil((n * spacing + offset + length + margin) / h))
        grid = GridSpec(1, h, k * h)
        p = grid.axis
        phi = np.zeros(grid.shape, dtype=complex)
        for j in range(1, n + 1):
            start = j * spacing + offset
            phi[(p >= start - 1e-9) & (p < start + length - 1e-9)] = 1.0
        op = ConvolutionOp.from_function(grid, f)
        state = StateVector(grid, weight, phi)
        out = op.apply(state)
        ratios.append(out.r_norm() / state.r_norm())
        harm.append(float(np.sum(1.0 / np.arange(1, n + 1))))
    params = {
        "interval": [lo, hi],
        "length": length,
        "spacing": spacing,
        "offset": offset,
        "h": h,
        "mass": mass,
        "margin": margin,
    }
    return IntervalTable(tuple(int(n) for n in ladder), tuple(harm), tuple(ratios), params)


@dataclass(frozen=True)
class SupportReport:
    """Outcome of the lower-support check; ``margins`` are ``inf supp(A phi) - inf supp(phi)``."""

    passed: bool
    margins: tuple[float, ...]


def _inf_support(amps: np.ndarray, axis: np.ndarray, rel_tol: float) -> float:
    mag = np.abs(amps)
    peak = float(mag.max(initial=0.0))
    if peak == 0:
        return math.inf
    idx = np.flatnonzero(mag > rel_tol * peak)
    return float(axis[idx[0]])


def support_preservation_check(
    op: LinearOperator, probes: Sequence[StateVector], rel_tol: float = 1e-10
) -> SupportReport:
    """Check ``inf supp(A phi) >= inf supp(phi)`` on one-dimensional probes.

    Support is taken at ``rel_tol`` relative to each vector's maximum, which
    ignores FFT round-off.
    """
    if op.grid.dim != 1:
        raise ValueError("support check is defined for one-dimensional grids")
    axis = op.grid.axis
    margins = []
    for phi in probes:
        out = op.apply(phi)
        margins.append(_inf_support(out.amplitudes, axis, rel_tol) - _inf_support(phi.amplitudes, axis, rel_tol))
    passed = all(m >= -1e-9 * op.grid.spacing for m in margins)
    return SupportReport(passed, tuple(margins))


def ideal_membership(op: LinearOperator, region, tol: float = 1e-8, **probe_kwargs) -> bool:
    """True iff ``|sigma(A)| < tol`` at every position grid point of the open region.

    ``region`` is an interval ``(lo, hi)`` or a list of ``(lo, hi)`` per axis.
    """
    bounds = [tuple(region)] if np.isscalar(region[0]) else [tuple(b) for b in region]
    if "window" not in probe_kwargs:
        probe_kwargs["window"] = bounds
    if isinstance(op.grid, LatticeSpec):
        sym = torus_symbol(op).sample()
    else:
        sym = symbol_of(op, **probe_kwargs)
    inside = np.ones(sym.grid.shape, dtype=bool)
    for (lo, hi), c in zip(bounds, sym.grid.mesh()):
        inside &= (c > lo) & (c < hi)
    inside &= sym.mask
    if not inside.any():
        raise ValueError("region contains no point where the symbol was determined")
    return bool(np.max(np.abs(sym.values[inside])) < tol)
