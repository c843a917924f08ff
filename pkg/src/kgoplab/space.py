"""Discretized momentum spaces L^2(R^n, w(p) dp) and the integer-lattice model.

A state is a complex array sampled on a uniform grid ``h Z^n ∩ [-R, R]^n``.
Two inner products live on the same samples:

* the plain one, ``sum phi conj(psi) h^n``;
* the weighted one, ``sum phi conj(psi) w(p) h^n``, with ``w = 1/E`` and
  ``E(p) = sqrt(|p|^2 + m^2)`` for the relativistic weight.

The Fourier transform maps momentum samples to samples on the reciprocal
("position") grid with spacing ``2 pi / (M h)``, where ``M = 2R/h + 1`` is
the number of points per axis.  The kernel of the momentum-to-position
direction is ``exp(+i p.x)``; this is the convention under which
translation by ``a`` in momentum is multiplication by ``exp(+i a.x)``.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft

__all__ = [
    "DimensionMismatchError",
    "GridSpec",
    "LatticeSpec",
    "WeightSpec",
    "StateVector",
    "r_inner",
    "r_norm",
    "plain_inner",
    "plain_norm",
    "fourier",
    "embed_plain_into_r",
    "weight_values",
    "energy_values",
    "state_to_csv",
]

MAX_DIM = 3


class DimensionMismatchError(ValueError):
    """Raised when two states or an operator and a state live on different grids."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``h Z^n ∩ [-R, R]^n`` enumerated in row-major order.

    Parameters
    ----------
    dim : int
        Number of coordinates, 1 to 3.
    spacing : float
        Grid spacing ``h``.
    radius : float
        Half-width ``R`` of the box; ``R / h`` must be an integer.
    """

    dim: int
    spacing: float
    radius: float

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"dim must be an integer in 1..{MAX_DIM}, got {self.dim!r}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        ratio = self.radius / self.spacing
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"radius/spacing must be an integer (no partial cells), got {ratio!r}"
            )
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n_side(self) -> int:
        """Number of grid points on each side of the origin along one axis."""
        return int(round(self.radius / self.spacing))

    @property
    def points_per_axis(self) -> int:
        return 2 * self.n_side + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def axis(self) -> np.ndarray:
        """Coordinates along one axis, ascending."""
        return self.spacing * np.arange(-self.n_side, self.n_side + 1)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape``, one per axis (``ij`` indexing)."""
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    def norm_sq(self) -> np.ndarray:
        """``|p|^2`` at every grid point."""
        return sum(c * c for c in self.mesh())

    def points(self) -> np.ndarray:
        """All grid points as an ``(size, dim)`` array in row-major order."""
        return np.stack([c.ravel() for c in self.mesh()], axis=1)

    def dual(self) -> "GridSpec":
        """Reciprocal grid reached by the discrete Fourier transform."""
        dx = 2.0 * math.pi / (self.points_per_axis * self.spacing)
        return GridSpec(self.dim, dx, dx * self.n_side)

    def index_of(self, point) -> tuple[int, ...]:
        """Array index of a grid point; raises ``ValueError`` off the grid."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a {self.dim}-vector, got {point!r}")
        steps = point / self.spacing
        rounded = np.round(steps)
        if np.any(np.abs(steps - rounded) > 1e-9 * np.maximum(1.0, np.abs(steps))):
            raise ValueError(f"{point!r} is not on the grid")
        idx = rounded.astype(int) + self.n_side
        if np.any(idx < 0) or np.any(idx >= self.points_per_axis):
            raise ValueError(f"{point!r} lies outside the box")
        return tuple(int(i) for i in idx)

    @property
    def grid_id(self) -> str:
        return f"grid-n{self.dim}-h{self.spacing!r}-R{self.radius!r}"

    def to_config(self) -> dict[str, str]:
        return {"dim": str(self.dim), "spacing": repr(self.spacing), "radius": repr(self.radius)}

    @classmethod
    def from_config(cls, block) -> "GridSpec":
        return cls(int(block["dim"]), float(block["spacing"]), float(block["radius"]))


class LatticeSpec(GridSpec):
    """Integer lattice ``Z^n ∩ [-N, N]^n``; the momentum side of the torus model.

    Symbols of operators on the lattice are ``2 pi``-periodic in each position
    coordinate.
    """

    def __init__(self, dim: int, cutoff: int):
        if int(cutoff) != cutoff or cutoff < 1:
            raise ValueError(f"cutoff must be a positive integer, got {cutoff!r}")
        super().__init__(dim=dim, spacing=1.0, radius=float(cutoff))

    def __reduce__(self):
        return (LatticeSpec, (self.dim, self.cutoff))

    @property
    def cutoff(self) -> int:
        return self.n_side

    @property
    def grid_id(self) -> str:
        return f"lattice-n{self.dim}-N{self.cutoff}"

    def to_config(self) -> dict[str, str]:
        return {"dim": str(self.dim), "cutoff": str(self.cutoff)}


@dataclass(frozen=True)
class WeightSpec:
    """Positive weight ``w(p)`` defining the r-inner product.

    Use the constructors :meth:`relativistic`, :meth:`flat`, :meth:`quadratic`
    or :meth:`custom` rather than the raw fields.
    """

    kind: str
    mass: Optional[float] = None
    func: Optional[Callable[..., np.ndarray]] = field(default=None, compare=True)
    name: str = ""

    def __post_init__(self):
        if self.kind == "relativistic":
            if self.mass is None or not self.mass > 0 or not math.isfinite(self.mass):
                raise ValueError("mass must be positive")
            object.__setattr__(self, "mass", float(self.mass))
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom weight needs a callable")
        elif self.kind not in ("flat", "quadratic"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def relativistic(cls, mass: float = 1.0) -> "WeightSpec":
        """``w(p) = 1 / sqrt(|p|^2 + m^2)``."""
        return cls("relativistic", mass=mass, name="relativistic")

    @classmethod
    def flat(cls) -> "WeightSpec":
        """``w = 1``: the plain L^2 space."""
        return cls("flat", name="flat")

    @classmethod
    def quadratic(cls) -> "WeightSpec":
        """``w(p) = 1 / (1 + |p|^2)``, integrable in one dimension."""
        return cls("quadratic", name="quadratic")

    @classmethod
    def custom(cls, func: Callable[..., np.ndarray], name: str = "custom") -> "WeightSpec":
        """Weight given by ``func(*coords)`` evaluated on coordinate arrays."""
        return cls("custom", func=func, name=name)

    @property
    def is_even(self) -> bool:
        return self.kind in ("relativistic", "flat", "quadratic")

    def evaluate(self, *coords: np.ndarray) -> np.ndarray:
        """Weight at the points given by coordinate arrays."""
        if self.kind == "custom":
            return np.asarray(self.func(*coords), dtype=float)
        sq = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
        if self.kind == "relativistic":
            return 1.0 / np.sqrt(sq + self.mass**2)
        if self.kind == "quadratic":
            return 1.0 / (1.0 + sq)
        return np.ones_like(sq, dtype=float)

    def energy(self, *coords: np.ndarray) -> np.ndarray:
        return 1.0 / self.evaluate(*coords)

    def sup_bound(self) -> float:
        """Upper bound of ``w`` over all of R^n (``inf`` if unknown)."""
        if self.kind == "relativistic":
            return 1.0 / self.mass
        if self.kind in ("flat", "quadratic"):
            return 1.0
        return math.inf

    def check(self, grid: GridSpec) -> None:
        """Validate positivity and boundedness of the weight on ``grid``."""
        w = weight_values(self, grid)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"weight {self.name!r} is not positive and finite on the grid")
        if np.max(w) > self.sup_bound() * (1 + 1e-12):
            raise ValueError(f"weight {self.name!r} exceeds its stated bound")

    def to_config(self) -> dict[str, str]:
        if self.kind == "custom":
            raise ValueError("custom weights have no config representation")
        out = {"weight_kind": self.kind}
        if self.kind == "relativistic":
            out["mass"] = repr(self.mass)
        return out

    @classmethod
    def from_config(cls, block) -> "WeightSpec":
        kind = block.get("weight_kind", "relativistic")
        if kind == "relativistic":
            return cls.relativistic(float(block.get("mass", 1.0)))
        if kind == "flat":
            return cls.flat()
        if kind == "quadratic":
            return cls.quadratic()
        raise ValueError(f"unknown weight_kind {kind!r}")


@functools.lru_cache(maxsize=64)
def weight_values(weight: WeightSpec, grid: GridSpec) -> np.ndarray:
    """Read-only array of ``w(p)`` on the grid."""
    w = np.ascontiguousarray(weight.evaluate(*grid.mesh()), dtype=float)
    w = np.broadcast_to(w, grid.shape).copy()
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=64)
def energy_values(weight: WeightSpec, grid: GridSpec) -> np.ndarray:
    """Read-only array of ``1/w(p)`` on the grid."""
    e = 1.0 / weight_values(weight, grid)
    e.setflags(write=False)
    return e


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes on a grid, paired with the weight of its space."""

    grid: GridSpec
    weight: WeightSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != self.grid.shape:
            if amps.size == self.grid.size:
                amps = amps.reshape(self.grid.shape)
            else:
                raise DimensionMismatchError(
                    f"amplitudes of shape {amps.shape} do not match grid shape {self.grid.shape}"
                )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, grid: GridSpec, weight: WeightSpec) -> "StateVector":
        return cls(grid, weight, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: GridSpec, weight: WeightSpec, func) -> "StateVector":
        return cls(grid, weight, np.broadcast_to(func(*grid.mesh()), grid.shape))

    @classmethod
    def delta(cls, grid: GridSpec, weight: WeightSpec, point=None) -> "StateVector":
        """Unit amplitude at one grid point (the origin by default)."""
        amps = np.zeros(grid.shape, dtype=complex)
        amps[grid.index_of(np.zeros(grid.dim) if point is None else point)] = 1.0
        return cls(grid, weight, amps)

    @classmethod
    def random(cls, grid: GridSpec, weight: WeightSpec, rng: np.random.Generator) -> "StateVector":
        """Complex Gaussian amplitudes."""
        return cls(grid, weight, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))

    def with_amplitudes(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(self.grid, self.weight, amplitudes)

    def with_weight(self, weight: WeightSpec) -> "StateVector":
        return StateVector(self.grid, weight, self.amplitudes)

    def r_norm(self) -> float:
        return r_norm(self)

    def plain_norm(self) -> float:
        return plain_norm(self)

    def support_mask(self, rel_tol: float = 1e-12) -> np.ndarray:
        """Grid points where the amplitude exceeds ``rel_tol`` times its maximum."""
        mag = np.abs(self.amplitudes)
        peak = mag.max(initial=0.0)
        if peak == 0:
            return np.zeros(self.grid.shape, dtype=bool)
        return mag > rel_tol * peak

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_space(self, other)
        return self.with_amplitudes(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same_space(self, other)
        return self.with_amplitudes(self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return self.with_amplitudes(scalar * self.amplitudes)

    __rmul__ = __mul__


def _check_same_space(phi: StateVector, psi: StateVector) -> None:
    if phi.grid != psi.grid:
        raise DimensionMismatchError(f"grids differ: {phi.grid!r} vs {psi.grid!r}")
    if phi.weight != psi.weight:
        raise DimensionMismatchError(f"weights differ: {phi.weight.name!r} vs {psi.weight.name!r}")


def r_inner(phi: StateVector, psi: StateVector) -> complex:
    """Weighted inner product ``sum phi conj(psi) w h^n`` (linear in ``phi``)."""
    _check_same_space(phi, psi)
    w = weight_values(phi.weight, phi.grid)
    return complex(np.vdot(psi.amplitudes, phi.amplitudes * w) * phi.grid.cell_volume)


def r_norm(phi: StateVector) -> float:
    w = weight_values(phi.weight, phi.grid)
    return math.sqrt(float(np.sum(np.abs(phi.amplitudes) ** 2 * w)) * phi.grid.cell_volume)


def plain_inner(phi: StateVector, psi: StateVector) -> complex:
    if phi.grid != psi.grid:
        raise DimensionMismatchError(f"grids differ: {phi.grid!r} vs {psi.grid!r}")
    return complex(np.vdot(psi.amplitudes, phi.amplitudes) * phi.grid.cell_volume)


def plain_norm(phi: StateVector) -> float:
    return math.sqrt(float(np.sum(np.abs(phi.amplitudes) ** 2)) * phi.grid.cell_volume)


def _to_position_array(amps: np.ndarray, grid: GridSpec) -> np.ndarray:
    axes = tuple(range(grid.dim))
    scale = (grid.spacing / math.sqrt(2.0 * math.pi)) ** grid.dim
    out = scipy.fft.ifftn(scipy.fft.ifftshift(amps, axes=axes), axes=axes, norm="forward")
    return scale * scipy.fft.fftshift(out, axes=axes)


def _to_momentum_array(amps: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse of :func:`_to_position_array`; ``grid`` is the momentum grid."""
    axes = tuple(range(grid.dim))
    dx = grid.dual().spacing
    scale = (dx / math.sqrt(2.0 * math.pi)) ** grid.dim
    out = scipy.fft.fftn(scipy.fft.ifftshift(amps, axes=axes), axes=axes)
    return scale * scipy.fft.fftshift(out, axes=axes)


def fourier(
    phi: StateVector,
    direction: str = "to_position",
    momentum_grid: Optional[GridSpec] = None,
    weight: Optional[WeightSpec] = None,
) -> StateVector:
    """Discrete Fourier transform, unitary for the plain inner products.

    Parameters
    ----------
    phi : StateVector
        Momentum samples (``to_position``) or position samples (``to_momentum``).
    direction : {'to_position', 'to_momentum'}
    momentum_grid : GridSpec, optional
        Target grid for ``to_momentum``.  Defaults to the grid whose dual is
        ``phi.grid``.
    weight : WeightSpec, optional
        Weight attached to the ``to_momentum`` result (flat by default).
        Position-space results always carry the flat weight.

    Notes
    -----
    ``to_position`` evaluates ``(h / sqrt(2 pi))^n sum_p phi(p) exp(+i p.x)``.
    """
    if direction == "to_position":
        return StateVector(phi.grid.dual(), WeightSpec.flat(), _to_position_array(phi.amplitudes, phi.grid))
    if direction == "to_momentum":
        if momentum_grid is None:
            momentum_grid = _momentum_grid_for(phi.grid)
        elif momentum_grid.dual() != phi.grid:
            raise DimensionMismatchError("position grid is not the dual of the requested momentum grid")
        return StateVector(
            momentum_grid,
            WeightSpec.flat() if weight is None else weight,
            _to_momentum_array(phi.amplitudes, momentum_grid),
        )
    raise ValueError(f"direction must be 'to_position' or 'to_momentum', got {direction!r}")


def _momentum_grid_for(position: GridSpec) -> GridSpec:
    h = 2.0 * math.pi / (position.points_per_axis * position.spacing)
    return GridSpec(position.dim, h, h * position.n_side)


def embed_plain_into_r(phi: StateVector, mass: float = 1.0) -> StateVector:
    """Reinterpret plain-L^2 amplitudes as a state of the relativistic space.

    The amplitudes are untouched; since ``w <= 1/m`` the r-norm is at most
    ``plain_norm / sqrt(m)``.
    """
    return phi.with_weight(WeightSpec.relativistic(mass))


def state_to_csv(phi: StateVector, path) -> None:
    """Write ``index, p_1..p_n, re, im`` rows in row-major order."""
    pts = phi.grid.points()
    amps = phi.amplitudes.ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index"] + [f"p{i + 1}" for i in range(phi.grid.dim)] + ["re", "im"])
        for i, (pt, a) in enumerate(zip(pts, amps)):
            writer.writerow([i] + [repr(float(c)) for c in pt] + [repr(float(a.real)), repr(float(a.imag))])


def array_digest(arr: np.ndarray) -> str:
    """Short content hash used in operator descriptors."""
    arr = np.ascontiguousarray(arr)
    return hashlib.sha256(arr.tobytes() + str(arr.shape).encode()).hexdigest()[:16]
