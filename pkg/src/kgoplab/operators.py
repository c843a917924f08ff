"""Matrix-free operators on the weighted momentum space.

Every operator implements two array-level maps:

``_apply(amps)``
    The action on amplitude arrays.
``_plain_adjoint(amps)``
    The adjoint with respect to the plain inner product.

The adjoint for the weighted inner product is derived once in the base
class as ``A* = M_E A^H M_w``: if ``<A phi, psi>_r = sum (A phi) conj(psi) w``
then moving ``A`` across gives ``A^H (w psi)`` and dividing by ``w`` restores
the weighted pairing.
"""

from __future__ import annotations

import json
import math
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.fft
import scipy.signal

from .space import (
    DimensionMismatchError,
    GridSpec,
    StateVector,
    WeightSpec,
    array_digest,
    energy_values,
    weight_values,
    _to_momentum_array,
    _to_position_array,
)

__all__ = [
    "CommensurabilityError",
    "LinearOperator",
    "Identity",
    "Multiplication",
    "TranslationOp",
    "TranslationSum",
    "ConvolutionOp",
    "PositionOp",
    "Resolvent",
    "GammaConjugation",
    "TildeConjugate",
    "FlipConjugate",
    "apply_translation",
    "translation_adjoint",
    "apply_convolution",
    "apply_position",
    "resolvent",
    "tilde_conjugate",
    "flip_conjugate",
    "gamma",
    "flip_state",
    "gaussian_kernel",
    "bump_kernel",
    "gaussian_mixture_kernel",
    "phase",
]


class CommensurabilityError(ValueError):
    """Raised when a translation vector is not a multiple of the grid spacing."""


def _as_vector(a, dim: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (dim,):
        raise DimensionMismatchError(f"expected a vector of length {dim}, got shape {a.shape}")
    return a


def phase(grid: GridSpec, a) -> np.ndarray:
    """``exp(i a.p)`` sampled on the grid."""
    a = _as_vector(a, grid.dim)
    arg = sum(ai * ci for ai, ci in zip(a, grid.mesh()))
    return np.exp(1j * arg) * np.ones(grid.shape)


def _shift_zero_fill(amps: np.ndarray, steps: Sequence[int]) -> np.ndarray:
    """``out[j] = amps[j - steps]`` with zeros shifted in."""
    out = np.zeros_like(amps)
    src, dst = [], []
    for s, size in zip(steps, amps.shape):
        if abs(s) >= size:
            return out
        if s >= 0:
            src.append(slice(0, size - s))
            dst.append(slice(s, size))
        else:
            src.append(slice(-s, size))
            dst.append(slice(0, size + s))
    out[tuple(dst)] = amps[tuple(src)]
    return out


class LinearOperator:
    """Bounded (or discretized unbounded) operator on states of one grid.

    Subclasses set ``self.grid`` and implement ``_apply``,
    ``_plain_adjoint`` and ``descriptor``.
    """

    grid: GridSpec

    def _apply(self, amps: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _plain_adjoint(self, amps: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def _check(self, phi: StateVector) -> None:
        if phi.grid != self.grid:
            raise DimensionMismatchError(
                f"operator lives on {self.grid.grid_id}, state on {phi.grid.grid_id}"
            )

    def apply(self, phi: StateVector) -> StateVector:
        self._check(phi)
        return phi.with_amplitudes(self._apply(phi.amplitudes))

    def adjoint_apply(self, psi: StateVector) -> StateVector:
        """Adjoint for the weighted inner product of ``psi``'s space."""
        self._check(psi)
        return psi.with_amplitudes(self._weighted_adjoint(psi.amplitudes, psi.weight))

    def _weighted_adjoint(self, amps: np.ndarray, weight: WeightSpec) -> np.ndarray:
        if weight.kind == "flat":
            return self._plain_adjoint(amps)
        w = weight_values(weight, self.grid)
        return energy_values(weight, self.grid) * self._plain_adjoint(w * amps)

    def plain_adjoint_apply(self, psi: StateVector) -> StateVector:
        self._check(psi)
        return psi.with_amplitudes(self._plain_adjoint(psi.amplitudes))

    def __call__(self, phi: StateVector) -> StateVector:
        return self.apply(phi)

    @property
    def H(self) -> "LinearOperator":
        """Plain-adjoint operator (the weighted adjoint is :meth:`adjoint_apply`)."""
        return PlainAdjoint(self)

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return Product(self, other)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return Sum([(1.0, self), (1.0, other)])

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return Sum([(1.0, self), (-1.0, other)])

    def __mul__(self, scalar) -> "LinearOperator":
        if isinstance(scalar, LinearOperator) or not np.isscalar(scalar):
            return NotImplemented
        return Sum([(complex(scalar), self)])

    __rmul__ = __mul__

    def __neg__(self) -> "LinearOperator":
        return Sum([(-1.0, self)])

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)


def _same_grid(ops: Iterable[LinearOperator]) -> GridSpec:
    grids = {op.grid for op in ops}
    if len(grids) != 1:
        raise DimensionMismatchError("operators act on different grids")
    return grids.pop()


def _complex_json(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


class Identity(LinearOperator):
    def __init__(self, grid: GridSpec):
        self.grid = grid

    def _apply(self, amps):
        return amps.copy()

    _plain_adjoint = _apply

    def descriptor(self):
        return {"family": "identity", "grid": self.grid.grid_id}


class Multiplication(LinearOperator):
    """Pointwise multiplication by samples of a function of momentum."""

    def __init__(self, grid: GridSpec, values, tag: str = ""):
        self.grid = grid
        values = np.asarray(values)
        self.values = np.broadcast_to(values, grid.shape).astype(complex)
        self.tag = tag

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable, tag: str = "") -> "Multiplication":
        return cls(grid, func(*grid.mesh()), tag)

    def _apply(self, amps):
        return self.values * amps

    def _plain_adjoint(self, amps):
        return np.conj(self.values) * amps

    def descriptor(self):
        return {
            "family": "multiplication",
            "tag": self.tag,
            "digest": array_digest(self.values),
            "grid": self.grid.grid_id,
        }


class TranslationOp(LinearOperator):
    """``(T_a phi)(p) = phi(p - a)``, zeros shifted in at the boundary.

    ``a`` must be an integer multiple of the grid spacing in every coordinate.
    """

    def __init__(self, grid: GridSpec, a):
        self.grid = grid
        self.a = _as_vector(a, grid.dim)
        steps = self.a / grid.spacing
        rounded = np.round(steps)
        if np.any(np.abs(steps - rounded) > 1e-9 * np.maximum(1.0, np.abs(steps))):
            raise CommensurabilityError(
                f"shift {self.a.tolist()} is not a multiple of spacing {grid.spacing}"
            )
        self.steps = tuple(int(s) for s in rounded)

    def _apply(self, amps):
        return _shift_zero_fill(amps, self.steps)

    def _plain_adjoint(self, amps):
        return _shift_zero_fill(amps, tuple(-s for s in self.steps))

    def descriptor(self):
        return {"family": "translation", "a": self.a.tolist(), "grid": self.grid.grid_id}


class TranslationSum(LinearOperator):
    """Finite combination ``sum_k c_k T_{a_k}``."""

    def __init__(self, grid: GridSpec, terms: Iterable[tuple]):
        self.grid = grid
        merged: dict[tuple, complex] = {}
        for coeff, a in terms:
            t = TranslationOp(grid, a)
            merged[t.steps] = merged.get(t.steps, 0.0) + complex(coeff)
        self.terms = sorted(merged.items())

    @property
    def shifts(self) -> list[np.ndarray]:
        return [np.asarray(s, dtype=float) * self.grid.spacing for s, _ in self.terms]

    @property
    def coefficients(self) -> list[complex]:
        return [c for _, c in self.terms]

    def _apply(self, amps):
        out = np.zeros_like(amps, dtype=complex)
        for steps, c in self.terms:
            out += c * _shift_zero_fill(amps, steps)
        return out

    def _plain_adjoint(self, amps):
        out = np.zeros_like(amps, dtype=complex)
        for steps, c in self.terms:
            out += np.conj(c) * _shift_zero_fill(amps, tuple(-s for s in steps))
        return out

    def reweighted(self, factor: Callable[[tuple], float]) -> "TranslationSum":
        """Same shifts with coefficients multiplied by ``factor(steps)``."""
        return TranslationSum(
            self.grid, [(c * factor(s), np.asarray(s) * self.grid.spacing) for s, c in self.terms]
        )

    def descriptor(self):
        return {
            "family": "translation_sum",
            "terms": [[list(s), _complex_json(c)] for s, c in self.terms],
            "grid": self.grid.grid_id,
        }


class ConvolutionOp(LinearOperator):
    """``(K_f phi)(p) = sum_q f(q) phi(p - q) h^n``.

    Parameters
    ----------
    grid : GridSpec
    kernel : ndarray
        Samples of ``f`` at offsets ``q``.  Either the grid shape (offsets in
        ``[-R, R]^n``) or the doubled shape ``(4K+1,)*n`` (offsets in
        ``[-2R, 2R]^n``), which captures every offset reachable inside the box.
    boundary : {'linear', 'circular'}
        Linear convolution with zero padding, or periodic wrap on the box.
    method : {'fft', 'direct'}
        Evaluation path for the linear case; both compute the same sum.
    tag : str
        Optional closed-form label recorded in the descriptor.
    """

    def __init__(self, grid: GridSpec, kernel, boundary: str = "linear", method: str = "fft", tag: str = ""):
        self.grid = grid
        kernel = np.asarray(kernel, dtype=complex)
        k = grid.n_side
        if kernel.shape == grid.shape:
            self.kernel_half = k
        elif kernel.shape == (4 * k + 1,) * grid.dim:
            self.kernel_half = 2 * k
        else:
            raise DimensionMismatchError(f"kernel shape {kernel.shape} fits neither the grid nor its doubled range")
        if boundary not in ("linear", "circular"):
            raise ValueError(f"boundary must be 'linear' or 'circular', got {boundary!r}")
        if boundary == "circular" and self.kernel_half != k:
            raise DimensionMismatchError("circular convolution needs a kernel on the grid itself")
        if method not in ("fft", "direct"):
            raise ValueError(f"method must be 'fft' or 'direct', got {method!r}")
        self.kernel = kernel
        self.boundary = boundary
        self.method = method
        self.tag = tag

    @classmethod
    def from_function(
        cls,
        grid: GridSpec,
        func: Callable,
        doubled: bool = True,
        **kwargs,
    ) -> "ConvolutionOp":
        """Sample ``func(*coords)`` on the offset grid (doubled range by default)."""
        offsets = kernel_grid(grid) if doubled else grid
        return cls(grid, np.broadcast_to(func(*offsets.mesh()), offsets.shape), **kwargs)

    @property
    def kernel_grid(self) -> GridSpec:
        return GridSpec(self.grid.dim, self.grid.spacing, self.grid.spacing * self.kernel_half)

    def _convolve(self, amps, kernel):
        h_n = self.grid.cell_volume
        if self.boundary == "circular":
            axes = tuple(range(self.grid.dim))
            spectrum = scipy.fft.fftn(scipy.fft.ifftshift(kernel, axes=axes), axes=axes)
            return scipy.fft.ifftn(spectrum * scipy.fft.fftn(amps, axes=axes), axes=axes) * h_n
        mode = "fft" if self.method == "fft" else "direct"
        full = scipy.signal.convolve(amps, kernel, mode="full", method=mode)
        k, kf = self.grid.n_side, self.kernel_half
        sl = tuple(slice(kf, kf + 2 * k + 1) for _ in range(self.grid.dim))
        return full[sl] * h_n

    def _apply(self, amps):
        return self._convolve(amps, self.kernel)

    def _plain_adjoint(self, amps):
        return self._convolve(amps, self.adjoint_kernel())

    def adjoint_kernel(self) -> np.ndarray:
        """``f*(q) = conj(f(-q))``."""
        return np.conj(self.kernel[(slice(None, None, -1),) * self.grid.dim])

    def with_kernel(self, kernel, tag: str = "") -> "ConvolutionOp":
        return ConvolutionOp(self.grid, kernel, boundary=self.boundary, method=self.method, tag=tag)

    def descriptor(self):
        return {
            "family": "convolution",
            "tag": self.tag,
            "boundary": self.boundary,
            "kernel_half": self.kernel_half,
            "digest": array_digest(self.kernel),
            "grid": self.grid.grid_id,
        }


def kernel_grid(grid: GridSpec) -> GridSpec:
    """Offset grid ``[-2R, 2R]^n`` covering all differences of grid points."""
    return GridSpec(grid.dim, grid.spacing, 2.0 * grid.radius)


class PositionOp(LinearOperator):
    """Discretized ``Q_i = i d/dp_i``.

    Parameters
    ----------
    grid : GridSpec
    axis : int
        Zero-based coordinate index.
    backend : {'difference', 'spectral'}
        Centered difference ``(i / 2h)(phi[j+1] - phi[j-1])`` with zero
        fill, or multiplication by ``x_i`` on the position side of the
        discrete Fourier transform (exact on periodic band-limited input).
    """

    def __init__(self, grid: GridSpec, axis: int = 0, backend: str = "difference"):
        if not 0 <= axis < grid.dim:
            raise DimensionMismatchError(f"axis {axis} out of range for dim {grid.dim}")
        if backend not in ("difference", "spectral"):
            raise ValueError(f"backend must be 'difference' or 'spectral', got {backend!r}")
        self.grid = grid
        self.axis = axis
        self.backend = backend

    def _apply(self, amps):
        if self.backend == "spectral":
            x = self.grid.dual().mesh()[self.axis]
            return _to_momentum_array(x * _to_position_array(amps, self.grid), self.grid)
        up = [0] * self.grid.dim
        up[self.axis] = -1
        down = [0] * self.grid.dim
        down[self.axis] = 1
        return (1j / (2 * self.grid.spacing)) * (
            _shift_zero_fill(amps, up) - _shift_zero_fill(amps, down)
        )

    # both discretizations are Hermitian matrices
    _plain_adjoint = _apply

    def descriptor(self):
        return {"family": "position", "axis": self.axis, "backend": self.backend, "grid": self.grid.grid_id}


class Resolvent(LinearOperator):
    """Trapezoid discretization of ``(Q_i - z)^{-1}``.

    For ``Im z > 0``::

        R phi(p) = i int_0^inf exp(i t z) phi(p + t e_i) dt

    and for ``Im z < 0`` the mirrored integral
    ``-i int_0^inf exp(-i t z) phi(p - t e_i) dt``.  The line integral stops
    at the box edge, where states vanish.
    """

    def __init__(self, grid: GridSpec, z: complex, axis: int = 0):
        z = complex(z)
        if z.imag == 0:
            raise ValueError("z must have nonzero imaginary part: the spectrum of Q_i is the real line")
        if not 0 <= axis < grid.dim:
            raise DimensionMismatchError(f"axis {axis} out of range for dim {grid.dim}")
        self.grid = grid
        self.z = z
        self.axis = axis

    def _sweep(self, amps, ratio, forward):
        # U_j = phi_j + ratio * U_{j -/+ 1}
        ax = self.axis
        if forward:
            return scipy.signal.lfilter([1.0], [1.0, -ratio], amps, axis=ax)
        rev = np.flip(amps, axis=ax)
        return np.flip(scipy.signal.lfilter([1.0], [1.0, -ratio], rev, axis=ax), axis=ax)

    def _apply(self, amps):
        h = self.grid.spacing
        if self.z.imag > 0:
            q = np.exp(1j * h * self.z)
            return 1j * h * (self._sweep(amps, q, forward=False) - 0.5 * amps)
        q = np.exp(-1j * h * self.z)
        return -1j * h * (self._sweep(amps, q, forward=True) - 0.5 * amps)

    def _plain_adjoint(self, amps):
        h = self.grid.spacing
        if self.z.imag > 0:
            q = np.conj(np.exp(1j * h * self.z))
            return -1j * h * (self._sweep(amps, q, forward=True) - 0.5 * amps)
        q = np.conj(np.exp(-1j * h * self.z))
        return 1j * h * (self._sweep(amps, q, forward=False) - 0.5 * amps)

    def descriptor(self):
        return {
            "family": "resolvent",
            "axis": self.axis,
            "z": _complex_json(self.z),
            "grid": self.grid.grid_id,
        }


class GammaConjugation(LinearOperator):
    """``gamma_a(A) = M_{exp(-i a.p)} A M_{exp(i a.p)}``."""

    def __init__(self, a, op: LinearOperator):
        self.grid = op.grid
        self.a = _as_vector(a, op.grid.dim)
        self.op = op
        self._phase = phase(op.grid, self.a)

    def _apply(self, amps):
        return np.conj(self._phase) * self.op._apply(self._phase * amps)

    def _plain_adjoint(self, amps):
        return np.conj(self._phase) * self.op._plain_adjoint(self._phase * amps)

    def descriptor(self):
        return {"family": "gamma", "a": self.a.tolist(), "inner": self.op.descriptor(), "grid": self.grid.grid_id}


class TildeConjugate(LinearOperator):
    """``M_{sqrt E}^{-1} A M_{sqrt E}``: ``A`` transported to the plain space.

    The map ``phi -> phi / sqrt(E)`` is unitary from the weighted space onto
    the plain one, so the plain adjoint of the result is the transport of the
    weighted adjoint of ``A``.
    """

    def __init__(self, op: LinearOperator, weight: WeightSpec):
        self.grid = op.grid
        self.op = op
        self.weight = weight
        self._root = np.sqrt(energy_values(weight, op.grid))

    def _apply(self, amps):
        return self.op._apply(self._root * amps) / self._root

    def _plain_adjoint(self, amps):
        return self._root * self.op._plain_adjoint(amps / self._root)

    def descriptor(self):
        return {
            "family": "tilde",
            "weight": self.weight.to_config() if self.weight.kind != "custom" else self.weight.name,
            "inner": self.op.descriptor(),
            "grid": self.grid.grid_id,
        }


def _flip_array(amps: np.ndarray) -> np.ndarray:
    return np.conj(amps[(slice(None, None, -1),) * amps.ndim])


def flip_state(phi: StateVector) -> StateVector:
    """``(F phi)(p) = conj(phi(-p))``; antiunitary for even weights."""
    return phi.with_amplitudes(_flip_array(phi.amplitudes))


class FlipConjugate(LinearOperator):
    """``F A F`` with the antiunitary flip ``F``."""

    def __init__(self, op: LinearOperator):
        self.grid = op.grid
        self.op = op

    def _apply(self, amps):
        return _flip_array(self.op._apply(_flip_array(amps)))

    def _plain_adjoint(self, amps):
        return _flip_array(self.op._plain_adjoint(_flip_array(amps)))

    def descriptor(self):
        return {"family": "flip", "inner": self.op.descriptor(), "grid": self.grid.grid_id}


class Sum(LinearOperator):
    """``sum_k c_k A_k``."""

    def __init__(self, terms: Sequence[tuple]):
        self.terms = [(complex(c), op) for c, op in terms]
        self.grid = _same_grid(op for _, op in self.terms)

    def _apply(self, amps):
        return sum(c * op._apply(amps) for c, op in self.terms)

    def _plain_adjoint(self, amps):
        return sum(np.conj(c) * op._plain_adjoint(amps) for c, op in self.terms)

    def descriptor(self):
        return {
            "family": "sum",
            "terms": [[_complex_json(c), op.descriptor()] for c, op in self.terms],
            "grid": self.grid.grid_id,
        }


class Product(LinearOperator):
    """``A B``: apply ``B`` first."""

    def __init__(self, left: LinearOperator, right: LinearOperator):
        self.grid = _same_grid([left, right])
        self.left = left
        self.right = right

    def _apply(self, amps):
        return self.left._apply(self.right._apply(amps))

    def _plain_adjoint(self, amps):
        return self.right._plain_adjoint(self.left._plain_adjoint(amps))

    def descriptor(self):
        return {
            "family": "product",
            "left": self.left.descriptor(),
            "right": self.right.descriptor(),
            "grid": self.grid.grid_id,
        }


class PlainAdjoint(LinearOperator):
    def __init__(self, op: LinearOperator):
        self.grid = op.grid
        self.op = op

    def _apply(self, amps):
        return self.op._plain_adjoint(amps)

    def _plain_adjoint(self, amps):
        return self.op._apply(amps)

    def descriptor(self):
        return {"family": "plain_adjoint", "inner": self.op.descriptor(), "grid": self.grid.grid_id}


class WeightedAdjoint(LinearOperator):
    """The weighted adjoint ``A*`` as an operator in its own right."""

    def __init__(self, op: LinearOperator, weight: WeightSpec):
        self.grid = op.grid
        self.op = op
        self.weight = weight

    def _apply(self, amps):
        return self.op._weighted_adjoint(amps, self.weight)

    def _plain_adjoint(self, amps):
        # (E A^H w)^H = w A E
        if self.weight.kind == "flat":
            return self.op._apply(amps)
        w = weight_values(self.weight, self.grid)
        return w * self.op._apply(energy_values(self.weight, self.grid) * amps)

    def descriptor(self):
        return {"family": "weighted_adjoint", "inner": self.op.descriptor(), "grid": self.grid.grid_id}


def gamma(a, op: LinearOperator) -> LinearOperator:
    """The action ``gamma_a`` on operators."""
    return GammaConjugation(a, op)


def apply_translation(a, phi: StateVector) -> StateVector:
    return TranslationOp(phi.grid, a).apply(phi)


def translation_adjoint(a, psi: StateVector) -> StateVector:
    """Weighted adjoint ``(T_a* psi)(p) = [E(p) / E(p + a)] psi(p + a)``."""
    return TranslationOp(psi.grid, a).adjoint_apply(psi)


def apply_convolution(f, phi: StateVector, **kwargs) -> StateVector:
    """``K_f phi`` for kernel samples ``f`` (grid or doubled shape)."""
    return ConvolutionOp(phi.grid, f, **kwargs).apply(phi)


def apply_position(i: int, phi: StateVector, backend: str = "difference") -> StateVector:
    return PositionOp(phi.grid, i, backend).apply(phi)


def resolvent(i: int, z: complex, phi: StateVector) -> StateVector:
    return Resolvent(phi.grid, z, i).apply(phi)


def tilde_conjugate(op: LinearOperator, weight: Optional[WeightSpec] = None) -> TildeConjugate:
    return TildeConjugate(op, WeightSpec.relativistic(1.0) if weight is None else weight)


def flip_conjugate(op: LinearOperator) -> FlipConjugate:
    return FlipConjugate(op)


def gaussian_kernel(center=0.0, width: float = 1.0, amplitude: complex = 1.0) -> Callable:
    """``amplitude * exp(-|p - center|^2 / width^2)`` as a function of coordinates."""

    def f(*coords):
        c = np.broadcast_to(np.asarray(center, dtype=float), (len(coords),))
        sq = sum((x - ci) ** 2 for x, ci in zip(coords, c))
        return amplitude * np.exp(-sq / width**2)

    return f


def bump_kernel(radius: float = 1.0, center=0.0, modulation=None) -> Callable:
    """Standard bump ``exp(1/(r^2 - 1))`` with ``r = |p - center| / radius``.

    ``modulation`` multiplies by ``exp(i modulation . p)``.
    """

    def f(*coords):
        c = np.broadcast_to(np.asarray(center, dtype=float), (len(coords),))
        r2 = sum((x - ci) ** 2 for x, ci in zip(coords, c)) / radius**2
        out = np.zeros(np.shape(r2))
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
        if modulation is not None:
            mod = np.broadcast_to(np.asarray(modulation, dtype=float), (len(coords),))
            out = out * np.exp(1j * sum(mi * x for mi, x in zip(mod, coords)))
        return out

    return f


def gaussian_mixture_kernel(rng: np.random.Generator, dim: int, components: int = 3) -> tuple[Callable, dict]:
    """Random complex Gaussian mixture kernel and its parameters.

    Centers lie in ``[-2, 2]^n``, widths in ``[0.4, 1.5]``, amplitudes are
    complex with modulus in ``[0.2, 1]``.
    """
    centers = rng.uniform(-2.0, 2.0, size=(components, dim))
    widths = rng.uniform(0.4, 1.5, size=components)
    amps = rng.uniform(0.2, 1.0, size=components) * np.exp(2j * np.pi * rng.uniform(size=components))
    parts = [gaussian_kernel(c, w, a) for c, w, a in zip(centers, widths, amps)]

    def f(*coords):
        return sum(p(*coords) for p in parts)

    params = {"centers": centers.tolist(), "widths": widths.tolist(), "amplitudes": [_complex_json(a) for a in amps]}
    return f, params
