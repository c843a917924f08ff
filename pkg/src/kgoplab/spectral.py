"""Operator norms, spectral subspaces, principal angles and compactness probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .operators import ConvolutionOp, LinearOperator, Multiplication, Sum, TildeConjugate, TranslationOp
from .space import (
    GridSpec,
    StateVector,
    WeightSpec,
    _to_momentum_array,
    energy_values,
    weight_values,
)

__all__ = [
    "NORM_SEED",
    "NormEstimate",
    "operator_norm",
    "dense_matrix",
    "translation_norm_exact",
    "translation_norm_grid",
    "EmptySubspaceError",
    "RankDeficientError",
    "SubspaceBasis",
    "build_subspace",
    "PrincipalAngleReport",
    "principal_angles",
    "CompactnessReport",
    "compactness_probe",
    "loglog_slope",
]

NORM_SEED = 0x4B47
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class NormEstimate:
    """Result of a norm computation.

    Attributes
    ----------
    value : float
        Best estimate of the operator norm.
    converged : bool
        Whether the stopping criterion was met.
    iterations : int
        Power iterations used (0 for direct methods).
    interval : tuple of float
        Last two successive estimates; both are lower bounds of the norm.
    method : str
    """

    value: float
    converged: bool
    iterations: int
    interval: tuple[float, float]
    method: str

    def __float__(self) -> float:
        return self.value


def _weighted_norm(amps: np.ndarray, w: np.ndarray, cell: float) -> float:
    return math.sqrt(float(np.sum(np.abs(amps) ** 2 * w)) * cell)


def _power_iteration(op: LinearOperator, weight: WeightSpec, tol: float, max_iter: int) -> NormEstimate:
    grid = op.grid
    w = weight_values(weight, grid)
    cell = grid.cell_volume
    rng = np.random.default_rng(NORM_SEED)
    v = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    v /= _weighted_norm(v, w, cell)
    prev = 0.0
    est = 0.0
    for it in range(1, max_iter + 1):
        u = op._apply(v)
        y = op._weighted_adjoint(u, weight)
        ny = _weighted_norm(y, w, cell)
        if ny == 0.0:
            return NormEstimate(0.0, True, it, (0.0, 0.0), "power")
        # sqrt(||A*A v||) for unit v bounds ||A|| from below
        est = math.sqrt(ny)
        if it > 1 and abs(est - prev) <= tol * est:
            return NormEstimate(est, True, it, (prev, est), "power")
        prev = est
        v = y / ny
    return NormEstimate(est, False, max_iter, (prev, est), "power")


def dense_matrix(op: LinearOperator) -> np.ndarray:
    """Matrix of ``op`` in the row-major grid enumeration, built column by column."""
    n = op.grid.size
    mat = np.empty((n, n), dtype=complex)
    e = np.zeros(n, dtype=complex)
    for j in range(n):
        e[j] = 1.0
        mat[:, j] = op._apply(e.reshape(op.grid.shape)).ravel()
        e[j] = 0.0
    return mat


def _balanced(op: LinearOperator, weight: WeightSpec, mat: Optional[np.ndarray] = None) -> np.ndarray:
    # W^{1/2} A W^{-1/2} has the same 2-norm as A on the weighted space
    mat = dense_matrix(op) if mat is None else mat
    root = np.sqrt(weight_values(weight, op.grid)).ravel()
    return root[:, None] * mat / root[None, :]


def _arpack_norm(op: LinearOperator, weight: WeightSpec, tol: float) -> NormEstimate:
    grid = op.grid
    root = np.sqrt(weight_values(weight, grid))
    shape = grid.shape

    def mv(x):
        return (root * op._apply(x.reshape(shape) / root)).ravel()

    def rmv(x):
        return (root * op._weighted_adjoint(x.reshape(shape) / root, weight)).ravel()

    lin = scipy.sparse.linalg.LinearOperator((grid.size, grid.size), matvec=mv, rmatvec=rmv, dtype=complex)
    rng = np.random.default_rng(NORM_SEED)
    v0 = rng.standard_normal(grid.size)
    s = scipy.sparse.linalg.svds(lin, k=1, tol=tol, v0=v0, return_singular_vectors=False)
    val = float(s[0])
    return NormEstimate(val, True, 0, (val, val), "arpack")


def operator_norm(
    op: LinearOperator,
    weight: Optional[WeightSpec] = None,
    tol: float = 1e-8,
    max_iter: int = 20000,
    method: str = "power",
) -> NormEstimate:
    """Operator norm on the weighted space.

    Parameters
    ----------
    op : LinearOperator
    weight : WeightSpec, optional
        Weight of the space; relativistic with ``m = 1`` by default.
    tol : float
        Relative change between successive power-iteration estimates at
        which iteration stops.
    max_iter : int
    method : {'power', 'dense', 'arpack', 'auto'}
        ``power`` iterates on ``A*A`` from a seeded random start.
        ``dense`` assembles the matrix and takes its exact 2-norm.
        ``arpack`` runs a Lanczos bidiagonalization through the adjoint.
        ``auto`` picks ``dense`` up to 2000 unknowns and ``power`` above.

    Returns
    -------
    NormEstimate
        ``converged`` is False if ``max_iter`` ran out.
    """
    weight = WeightSpec.relativistic(1.0) if weight is None else weight
    if method == "auto":
        method = "dense" if op.grid.size <= DENSE_LIMIT else "power"
    if method == "power":
        return _power_iteration(op, weight, tol, max_iter)
    if method == "dense":
        val = float(np.linalg.norm(_balanced(op, weight), 2))
        return NormEstimate(val, True, 0, (val, val), "dense")
    if method == "arpack":
        return _arpack_norm(op, weight, tol)
    raise ValueError(f"unknown method {method!r}")


def translation_norm_exact(a, mass: float = 1.0) -> float:
    """Continuum norm of ``T_a`` on the relativistic space.

    ``||T_a||^2 = sup_p E(p) / E(p + a)``.  Along the direction of ``a`` the
    ratio is maximized where ``t (t + |a|) = m^2`` on the side opposite to
    ``a``, i.e. ``t = -(|a| + sqrt(|a|^2 + 4 m^2)) / 2``; transverse components
    only pull the ratio toward 1.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    s = float(np.linalg.norm(np.atleast_1d(np.asarray(a, dtype=float))))
    if s == 0.0:
        return 1.0
    t = -(s + math.sqrt(s * s + 4 * mass * mass)) / 2.0
    return math.sqrt(math.hypot(t, mass) / math.hypot(t + s, mass))


def translation_norm_grid(grid: GridSpec, a, weight: Optional[WeightSpec] = None) -> float:
    """``sup`` over grid points ``p`` with ``p + a`` on the grid of ``sqrt(E(p)/E(p+a))``.

    This is the exact norm of the zero-filled discrete translation, whose
    ``T*T`` is the diagonal multiplier ``E(p)/E(p+a)`` on the points that
    are not shifted out.
    """
    weight = WeightSpec.relativistic(1.0) if weight is None else weight
    t = TranslationOp(grid, a)
    e = energy_values(weight, grid)
    # points q with q + a on the grid, and E(q + a) read back at q
    kept = t._plain_adjoint(np.ones(grid.shape)) != 0
    if not kept.any():
        return 0.0
    e_shift = t._plain_adjoint(e).real
    return math.sqrt(float(np.max(e[kept] / e_shift[kept])))


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


class EmptySubspaceError(ValueError):
    """The region meets no point of the position grid."""


class RankDeficientError(ValueError):
    """Basis vectors are numerically dependent."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (Gram condition number {condition:.3e})")
        self.condition = condition


Box = Sequence[tuple[float, float]]


def _region_mask(position: GridSpec, region: Sequence[Box]) -> np.ndarray:
    coords = position.mesh()
    mask = np.zeros(position.shape, dtype=bool)
    for box in region:
        if len(box) != position.dim:
            raise ValueError(f"box {box!r} does not have {position.dim} intervals")
        inside = np.ones(position.shape, dtype=bool)
        for (lo, hi), c in zip(box, coords):
            inside &= (c > lo) & (c < hi)
        mask |= inside
    return mask


def _normalize_region(region) -> list:
    """Accept ``(lo, hi)``, a list of such pairs for one box, or a list of boxes."""
    arr = region
    if len(arr) == 2 and np.isscalar(arr[0]):
        return [[tuple(arr)]]
    if all(len(b) == 2 and np.isscalar(b[0]) for b in arr):
        return [[tuple(b) for b in arr]]
    return [[tuple(iv) for iv in box] for box in arr]


def _weighted_mgs(cols: np.ndarray, w: np.ndarray, cell: float) -> np.ndarray:
    """Modified Gram-Schmidt in ``<u, v> = sum u conj(v) w h^n`` with one reorthogonalization."""
    q = cols.astype(complex, copy=True)
    k = q.shape[1]
    for j in range(k):
        for _ in range(2):
            for i in range(j):
                c = np.vdot(q[:, i] * w, q[:, j]) * cell
                q[:, j] -= c * q[:, i]
        nrm = math.sqrt(float(np.sum(np.abs(q[:, j]) ** 2 * w)) * cell)
        if nrm == 0.0:
            raise RankDeficientError("basis vector vanished during orthogonalization", math.inf)
        q[:, j] /= nrm
    return q


@dataclass
class SubspaceBasis:
    """Momentum-side basis of the spectral subspace of a position region.

    Attributes
    ----------
    grid, weight
        Momentum grid and weight of the ambient space.
    region : list of boxes
        Open axis-aligned boxes in position space.
    mask : ndarray of bool
        Position-grid points strictly inside the region.
    columns : ndarray
        ``(grid.size, dim)`` matrix; column ``j`` is the momentum transform
        of the unit spike at the ``j``-th point of ``mask``.
    gram : ndarray
        Weighted Gram matrix of ``columns``.
    """

    grid: GridSpec
    weight: WeightSpec
    region: list
    mask: np.ndarray
    columns: np.ndarray
    gram: np.ndarray
    _orthonormal: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.gram))

    def orthonormal(self) -> np.ndarray:
        """Weighted-orthonormal basis (cached)."""
        if self._orthonormal is None:
            w = weight_values(self.weight, self.grid).ravel()
            self._orthonormal = _weighted_mgs(self.columns, w, self.grid.cell_volume)
        return self._orthonormal

    def projection_residual(self, phi: StateVector) -> float:
        """``||phi - P phi||_r / ||phi||_r`` for the weighted orthogonal projection ``P``."""
        q = self.orthonormal()
        w = weight_values(self.weight, self.grid).ravel()
        v = phi.amplitudes.ravel()
        coeff = q.conj().T @ (w * v) * self.grid.cell_volume
        res = v - q @ coeff
        cell = self.grid.cell_volume
        return _weighted_norm(res, w, cell) / _weighted_norm(v, w, cell)

    def state(self, coefficients) -> StateVector:
        """Combination of the raw columns."""
        amps = self.columns @ np.asarray(coefficients, dtype=complex)
        return StateVector(self.grid, self.weight, amps.reshape(self.grid.shape))


def build_subspace(grid: GridSpec, weight: WeightSpec, region) -> SubspaceBasis:
    """Basis of the spectral subspace ``H_S`` on the discretized space.

    Parameters
    ----------
    grid : GridSpec
        Momentum grid.
    weight : WeightSpec
    region : sequence
        An interval ``(lo, hi)`` in one dimension, a list of ``n`` intervals
        forming one box, or a list of such boxes.  Boxes are open.

    Raises
    ------
    EmptySubspaceError
        If no point of the dual grid lies inside the region.
    """
    region = _normalize_region(region)
    position = grid.dual()
    mask = _region_mask(position, region)
    idx = np.flatnonzero(mask.ravel())
    if idx.size == 0:
        raise EmptySubspaceError(f"region {region!r} contains no position grid point")
    cols = np.empty((grid.size, idx.size), dtype=complex)
    spike = np.zeros(grid.size, dtype=complex)
    for j, i in enumerate(idx):
        spike[i] = 1.0
        cols[:, j] = _to_momentum_array(spike.reshape(grid.shape), grid).ravel()
        spike[i] = 0.0
    w = weight_values(weight, grid).ravel()
    gram = cols.conj().T @ (w[:, None] * cols) * grid.cell_volume
    return SubspaceBasis(grid, weight, region, mask, cols, gram)


@dataclass(frozen=True)
class PrincipalAngleReport:
    """Cosines of the principal angles, largest first."""

    cosines: np.ndarray
    dims: tuple[int, int]
    conditions: tuple[float, float]
    grid_id: str
    weight: str

    @property
    def top(self) -> float:
        return float(self.cosines[0]) if self.cosines.size else 0.0

    def intersection_dimension(self, threshold: float = 1e-8) -> int:
        """Number of cosines above ``1 - threshold``."""
        return int(np.sum(self.cosines > 1.0 - threshold))


def principal_angles(b1: SubspaceBasis, b2: SubspaceBasis, max_condition: float = 1e12) -> PrincipalAngleReport:
    """Principal angles between two subspaces in the weighted inner product.

    Raises
    ------
    RankDeficientError
        If either Gram matrix has condition number above ``max_condition``.
    """
    if b1.grid != b2.grid or b1.weight != b2.weight:
        raise ValueError("bases live on different spaces")
    for b in (b1, b2):
        if b.condition > max_condition:
            raise RankDeficientError("basis is numerically rank deficient", b.condition)
    w = weight_values(b1.weight, b1.grid).ravel()
    q1, q2 = b1.orthonormal(), b2.orthonormal()
    cross = q1.conj().T @ (w[:, None] * q2) * b1.grid.cell_volume
    cos = np.clip(scipy.linalg.svdvals(cross), 0.0, 1.0)
    return PrincipalAngleReport(
        np.sort(cos)[::-1],
        (b1.dim, b2.dim),
        (b1.condition, b2.condition),
        b1.grid.grid_id,
        b1.weight.name,
    )


@dataclass(frozen=True)
class CompactnessReport:
    """Leading singular values of the tilde-commutator difference at several radii."""

    radii: tuple[float, ...]
    singular_values: tuple[np.ndarray, ...]
    spacing: float

    def top_change(self) -> float:
        """Relative change of the largest singular value between the last two radii."""
        s_prev, s_last = self.singular_values[-2][0], self.singular_values[-1][0]
        return abs(s_last - s_prev) / max(abs(s_prev), 1e-300)

    def tail_ratio(self, index: int = 49) -> tuple[float, ...]:
        return tuple(float(s[index] / s[0]) if s[0] > 0 else 0.0 for s in self.singular_values)


def compactness_difference(op: ConvolutionOp, weight: WeightSpec) -> LinearOperator:
    """``K~_f - (K~_{f*})^H`` on the plain space.

    On the weighted space ``K_f* = M_E K_{f*} M_{1/E}``; the two tilde
    transports coincide exactly when the weight is flat.
    """
    star = op.with_kernel(op.adjoint_kernel())
    left = TildeConjugate(op, weight)
    right = TildeConjugate(star, weight).H
    return Sum([(1.0, left), (-1.0, right)])


def compactness_probe(
    kernel_func,
    radii: Sequence[float] = (20.0, 40.0),
    spacing: float = 0.25,
    weight: Optional[WeightSpec] = None,
    count: int = 60,
    dim: int = 1,
) -> CompactnessReport:
    """Singular values of ``K~_f - (K~_{f*})^H`` at each truncation radius."""
    weight = WeightSpec.relativistic(1.0) if weight is None else weight
    out = []
    for radius in radii:
        grid = GridSpec(dim, spacing, radius)
        op = ConvolutionOp.from_function(grid, kernel_func)
        diff = compactness_difference(op, weight)
        s = scipy.linalg.svdvals(dense_matrix(diff))
        out.append(s[:count])
    return CompactnessReport(tuple(float(r) for r in radii), tuple(out), spacing)


def multiplication_norm(op: Multiplication) -> float:
    """Exact norm of a multiplication operator: ``max |g|``."""
    return float(np.max(np.abs(op.values)))
