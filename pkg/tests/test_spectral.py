"""Norm estimation, spectral subspaces, principal angles and the compactness probe."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgoplab.operators import (
    ConvolutionOp,
    Identity,
    Multiplication,
    PositionOp,
    Product,
    TranslationOp,
    WeightedAdjoint,
    gaussian_kernel,
)
from kgoplab.space import GridSpec, StateVector, WeightSpec, _to_momentum_array
from kgoplab.spectral import (
    EmptySubspaceError,
    RankDeficientError,
    SubspaceBasis,
    build_subspace,
    compactness_probe,
    dense_matrix,
    loglog_slope,
    multiplication_norm,
    operator_norm,
    principal_angles,
    translation_norm_exact,
    translation_norm_grid,
)

GOLDEN_ROOT = math.sqrt((1 + math.sqrt(5)) / 2)


# --- norms --------------------------------------------------------------------


@pytest.mark.parametrize("method", ["power", "dense", "arpack"])
def test_identity_has_norm_one(grid1, rel, method):
    assert operator_norm(Identity(grid1), rel, method=method).value == pytest.approx(1.0, abs=1e-8)


def test_multiplication_norm_is_sup(grid1, rel):
    op = Multiplication.from_function(grid1, lambda p: (1 + 0.5j) * np.cos(p) / (1 + 0.1 * p * p))
    exact = multiplication_norm(op)
    assert exact == pytest.approx(abs(1 + 0.5j))
    for method in ("power", "dense", "arpack"):
        assert operator_norm(op, rel, method=method).value == pytest.approx(exact, rel=1e-6)


def test_power_dense_and_arpack_agree(rel):
    grid = GridSpec(1, 0.1, 10.0)
    op = ConvolutionOp.from_function(grid, gaussian_kernel(0.5, 0.9, 1 - 1j)) @ TranslationOp(grid, 1.0)
    dense = operator_norm(op, rel, method="dense").value
    power = operator_norm(op, rel, tol=1e-12, method="power")
    assert power.converged
    assert power.value == pytest.approx(dense, rel=1e-6)
    assert power.value <= dense * (1 + 1e-12)
    assert operator_norm(op, rel, method="arpack", tol=1e-12).value == pytest.approx(dense, rel=1e-10)


def test_power_iteration_reports_nonconvergence(rel):
    grid = GridSpec(1, 0.05, 20.0)
    est = operator_norm(TranslationOp(grid, 1.0), rel, max_iter=3)
    assert not est.converged and est.iterations == 3
    assert est.value <= translation_norm_exact(1.0)


def test_norm_of_adjoint_equals_norm(rel):
    grid = GridSpec(1, 0.25, 6.0)
    op = ConvolutionOp.from_function(grid, gaussian_kernel(1.0, 0.5, 1j)) @ TranslationOp(grid, -0.5)
    n = operator_norm(op, rel, method="dense").value
    n_star = operator_norm(WeightedAdjoint(op, rel), rel, method="dense").value
    assert n_star == pytest.approx(n, rel=1e-10)


def test_submultiplicative(rel):
    grid = GridSpec(1, 0.25, 6.0)
    a = ConvolutionOp.from_function(grid, gaussian_kernel(0.5, 0.7))
    b = TranslationOp(grid, 2.0)
    na, nb = (operator_norm(x, rel, method="dense").value for x in (a, b))
    assert operator_norm(Product(a, b), rel, method="dense").value <= na * nb * (1 + 1e-12)


def test_unknown_norm_method(grid1, rel):
    with pytest.raises(ValueError):
        operator_norm(Identity(grid1), rel, method="guess")


def test_translation_norm_exact_values():
    # [DERIVED] golden ratio from maximizing E(p)/E(p+1); independent scalar maximization
    from scipy.optimize import minimize_scalar

    assert translation_norm_exact(0.0) == 1.0
    assert translation_norm_exact(1.0) == pytest.approx(GOLDEN_ROOT, abs=1e-12)
    for a, m in [(1.0, 1.0), (3.0, 0.5), (10.0, 2.0)]:
        res = minimize_scalar(lambda p: -math.hypot(p, m) / math.hypot(p + a, m), bounds=(-10 * a, 0), method="bounded",
                              options={"xatol": 1e-12})
        assert translation_norm_exact(a, m) == pytest.approx(math.sqrt(-res.fun), rel=1e-9)
    with pytest.raises(ValueError):
        translation_norm_exact(1.0, 0.0)


def test_translation_norm_direction_and_scaling():
    assert translation_norm_exact([3.0, 4.0]) == pytest.approx(translation_norm_exact(5.0))
    assert translation_norm_exact(-7.0) == pytest.approx(translation_norm_exact(7.0))
    # ||T_a|| depends on a/m only
    assert translation_norm_exact(6.0, 2.0) == pytest.approx(translation_norm_exact(3.0, 1.0))
    ks = [16, 64, 256, 1024]
    assert loglog_slope(ks, [translation_norm_exact(k) for k in ks]) == pytest.approx(0.5, abs=0.01)


def test_grid_translation_norm_converges_to_exact():
    exact = translation_norm_exact(1.0)
    vals = [translation_norm_grid(GridSpec(1, h, 10.0), 1.0) for h in (0.5, 0.1, 0.02)]
    assert all(v <= exact + 1e-12 for v in vals)
    assert abs(vals[-1] - exact) < 1e-3
    # discrete translation norm matches the dense computation
    grid = GridSpec(1, 0.25, 6.0)
    dense = operator_norm(TranslationOp(grid, 1.5), WeightSpec.relativistic(1.0), method="dense").value
    assert translation_norm_grid(grid, 1.5) == pytest.approx(dense, rel=1e-12)


# --- spectral subspaces -------------------------------------------------------


def test_whole_box_subspace_is_everything(rel, rng):
    grid = GridSpec(1, 0.5, 4.0)
    b = build_subspace(grid, rel, (-100.0, 100.0))
    assert b.dim == grid.size
    assert b.projection_residual(StateVector.random(grid, rel, rng)) < 1e-12


def test_empty_region_rejected(rel):
    with pytest.raises(EmptySubspaceError):
        build_subspace(GridSpec(1, 0.5, 4.0), rel, (0.01, 0.02))


def test_orthonormal_basis_is_weighted_orthonormal(rel):
    grid = GridSpec(1, 0.5, 8.0)
    b = build_subspace(grid, rel, (0.0, 2.0))
    q = b.orthonormal()
    w = 1 / np.sqrt(grid.axis**2 + 1)
    gram = q.conj().T @ (w[:, None] * q) * grid.cell_volume
    assert np.max(np.abs(gram - np.eye(b.dim))) < 1e-12


def test_two_dimensional_box_region(rel):
    grid = GridSpec(2, 0.5, 3.0)
    b = build_subspace(grid, rel, [(0.0, 1.5), (-1.0, 1.0)])
    x1, x2 = grid.dual().mesh()
    assert b.dim == int(np.sum((x1 > 0) & (x1 < 1.5) & (x2 > -1) & (x2 < 1)))


def _windowed_states(grid, weight, rng, count=4, center_range=1.0, half_width=2.5):
    x = grid.dual().axis
    for _ in range(count):
        c = rng.uniform(-center_range, center_range)
        u = (x - c) / half_width
        win = np.where(np.abs(u) < 1, np.exp(-1 / np.maximum(1e-300, 1 - u * u)), 0.0)
        psi = win * np.exp(1j * rng.uniform(-3, 3) * x)
        yield psi, StateVector(grid, weight, _to_momentum_array(psi, grid))


def test_subspace_invariant_under_convolution(rel, rng):
    grid = GridSpec(1, 0.25, 100.0)
    basis = build_subspace(grid, rel, (-4.0, 4.0))
    for psi, phi in _windowed_states(grid, rel, rng):
        assert basis.projection_residual(phi) < 1e-12
        kf = ConvolutionOp.from_function(grid, gaussian_kernel(rng.uniform(-1, 1), rng.uniform(0.5, 2), 1 + 1j))
        assert basis.projection_residual(kf.apply(phi)) < 1e-8


def test_position_operator_on_spectral_subspace(rel, rng):
    grid = GridSpec(1, 0.25, 100.0)
    basis = build_subspace(grid, rel, (-4.0, 4.0))
    x = grid.dual().axis
    for psi, phi in _windowed_states(grid, rel, rng):
        spectral = PositionOp(grid, 0, "spectral").apply(phi).amplitudes
        expected = _to_momentum_array(x * psi, grid)
        assert np.max(np.abs(spectral - expected)) < 1e-6 * np.max(np.abs(expected))
        assert basis.projection_residual(PositionOp(grid, 0).apply(phi)) < 1e-6


def test_identical_subspaces_have_unit_cosines(rel):
    grid = GridSpec(1, 0.5, 16.0)
    b1 = build_subspace(grid, rel, (0.0, 1.0))
    b2 = build_subspace(grid, rel, (0.0, 1.0))
    rep = principal_angles(b1, b2)
    assert np.allclose(rep.cosines, 1.0, atol=1e-10)
    assert rep.intersection_dimension() == b1.dim


def test_principal_angles_symmetric(rel):
    grid = GridSpec(1, 0.5, 16.0)
    s = build_subspace(grid, rel, (0.0, 1.0))
    t = build_subspace(grid, rel, (-1.5, 0.5))
    assert np.allclose(principal_angles(s, t).cosines, principal_angles(t, s).cosines, atol=1e-12)


def test_flat_weight_disjoint_regions_are_orthogonal():
    # [DERIVED] Parseval: disjoint position supports are orthogonal in the plain product
    grid = GridSpec(1, 0.5, 16.0)
    flat = WeightSpec.flat()
    rep = principal_angles(build_subspace(grid, flat, (0.0, 1.0)), build_subspace(grid, flat, (-1.0, 0.0)))
    assert rep.top < 1e-10


def test_rank_deficiency_detected(rel):
    grid = GridSpec(1, 0.5, 8.0)
    b = build_subspace(grid, rel, (0.0, 2.0))
    dup = SubspaceBasis(grid, rel, b.region, b.mask, np.hstack([b.columns, b.columns[:, :1]]),
                        np.pad(b.gram, ((0, 1), (0, 1))))
    dup.gram[-1, :-1] = b.gram[0]
    dup.gram[:-1, -1] = b.gram[:, 0]
    dup.gram[-1, -1] = b.gram[0, 0]
    with pytest.raises(RankDeficientError):
        principal_angles(dup, b)


# --- compactness probe --------------------------------------------------------


def test_compactness_flat_control_is_zero():
    rep = compactness_probe(gaussian_kernel(), radii=(5.0, 10.0), spacing=0.25, weight=WeightSpec.flat(), count=5)
    assert all(np.max(s) == 0.0 for s in rep.singular_values)


def test_compactness_top_value_stable():
    rep = compactness_probe(gaussian_kernel(), radii=(10.0, 20.0), spacing=0.25, count=10)
    assert rep.singular_values[0][0] > 0.1
    assert rep.top_change() < 0.01


# --- properties ---------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-50, 50), mass=st.floats(0.1, 10))
def test_property_translation_norm_law(a, mass):
    n = translation_norm_exact(a, mass)
    assert n >= 1.0
    assert n == pytest.approx(translation_norm_exact(-a, mass))
    # sup of sqrt(E(p)/E(p+a)) is at most sqrt(1 + |a|/m)
    assert n <= math.sqrt(1 + abs(a) / mass) * (1 + 1e-12)


@settings(max_examples=15, deadline=None)
@given(lo=st.floats(-3, 2), length=st.floats(0.5, 2), shift=st.floats(-2, 2))
def test_property_cosines_in_unit_interval(lo, length, shift):
    grid = GridSpec(1, 0.5, 16.0)
    w = WeightSpec.relativistic(1.0)
    rep = principal_angles(build_subspace(grid, w, (lo, lo + length)), build_subspace(grid, w, (lo + shift, lo + shift + length)))
    assert np.all(rep.cosines >= 0) and np.all(rep.cosines <= 1)
    assert np.all(np.diff(rep.cosines) <= 0)
