"""Grids, weights, states, inner products and the Fourier transform."""

import csv
import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgoplab.space import (
    DimensionMismatchError,
    GridSpec,
    LatticeSpec,
    StateVector,
    WeightSpec,
    embed_plain_into_r,
    fourier,
    plain_inner,
    plain_norm,
    r_inner,
    r_norm,
    state_to_csv,
    weight_values,
)


# --- grids --------------------------------------------------------------------


def test_grid_point_count_matches_formula():
    # [TRIVIAL] (2R/h + 1)^n points
    for dim, h, radius in [(1, 0.5, 3.0), (2, 0.25, 1.0), (3, 1.0, 2.0)]:
        g = GridSpec(dim, h, radius)
        assert g.size == int(2 * radius / h + 1) ** dim
        assert g.points().shape == (g.size, dim)


def test_grid_enumeration_is_row_major():
    g = GridSpec(2, 1.0, 1.0)
    pts = g.points()
    assert pts[0].tolist() == [-1.0, -1.0]
    assert pts[1].tolist() == [-1.0, 0.0]
    assert pts[3].tolist() == [0.0, -1.0]
    # same enumeration on every call
    assert np.array_equal(pts, g.points())


def test_partial_cells_rejected():
    with pytest.raises(ValueError, match="integer"):
        GridSpec(1, 0.3, 1.0)


@pytest.mark.parametrize("dim", [0, 4])
def test_dimension_out_of_range_rejected(dim):
    with pytest.raises(ValueError):
        GridSpec(dim, 1.0, 2.0)


def test_index_of_round_trip_and_errors():
    g = GridSpec(2, 0.5, 2.0)
    for k, pt in enumerate(g.points()):
        assert np.ravel_multi_index(g.index_of(pt), g.shape) == k
    with pytest.raises(ValueError):
        g.index_of([0.25, 0.0])
    with pytest.raises(ValueError):
        g.index_of([3.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        g.index_of([0.0])


def test_dual_grid_spacing():
    g = GridSpec(1, 0.1, 5.0)
    assert g.dual().spacing == pytest.approx(2 * math.pi / (g.points_per_axis * g.spacing))
    assert g.dual().points_per_axis == g.points_per_axis


def test_grid_config_round_trip():
    g = GridSpec(2, 0.25, 3.0)
    assert GridSpec.from_config(g.to_config()) == g


def test_lattice_spec():
    lat = LatticeSpec(1, 5)
    assert lat.spacing == 1.0 and lat.cutoff == 5 and lat.size == 11
    assert lat.grid_id == "lattice-n1-N5"
    assert pickle.loads(pickle.dumps(lat)) == lat
    with pytest.raises(ValueError):
        LatticeSpec(1, 0)


# --- weights ------------------------------------------------------------------


@pytest.mark.parametrize("mass", [0.0, -1.0, float("nan")])
def test_nonpositive_mass_rejected(mass):
    with pytest.raises(ValueError, match="mass must be positive"):
        WeightSpec.relativistic(mass)


def test_relativistic_weight_bounded_by_inverse_mass():
    g = GridSpec(2, 0.25, 4.0)
    for m in (0.5, 1.0, 3.0):
        w = weight_values(WeightSpec.relativistic(m), g)
        assert np.max(w) == pytest.approx(1.0 / m)
        assert np.all(w <= 1.0 / m + 1e-15)


def test_weight_ratio_tends_to_one_far_out():
    # E(p + a)/E(p) = 1 + O(1/|p|) at a fixed shift
    w = WeightSpec.relativistic(1.0)
    a = 1.0
    prev = math.inf
    for p in (10.0, 100.0, 1000.0):
        dev = abs(w.evaluate(np.array(p + a)) / w.evaluate(np.array(p)) - 1.0)
        assert dev < 1.5 * a / p
        assert dev < prev
        prev = dev


def test_weight_values_cached_and_read_only():
    g = GridSpec(1, 0.5, 2.0)
    w = weight_values(WeightSpec.relativistic(1.0), g)
    assert w is weight_values(WeightSpec.relativistic(1.0), g)
    with pytest.raises(ValueError):
        w[0] = 2.0


def test_weight_check_and_config():
    g = GridSpec(1, 0.5, 2.0)
    WeightSpec.quadratic().check(g)
    WeightSpec.relativistic(2.0).check(g)
    with pytest.raises(ValueError):
        WeightSpec.custom(lambda p: -np.ones_like(p)).check(g)
    for w in (WeightSpec.relativistic(2.5), WeightSpec.flat(), WeightSpec.quadratic()):
        assert WeightSpec.from_config(w.to_config()) == w
    with pytest.raises(ValueError):
        WeightSpec("bogus")


# --- inner products -----------------------------------------------------------


def test_r_inner_delta_at_origin():
    # [TRIVIAL] delta at 0, h = 1, m = 1: w(0) h = 1
    g = GridSpec(1, 1.0, 3.0)
    d = StateVector.delta(g, WeightSpec.relativistic(1.0))
    assert r_inner(d, d) == pytest.approx(1.0)


def test_zero_vector_has_zero_norm(grid1, rel):
    assert r_norm(StateVector.zeros(grid1, rel)) == 0.0


def test_flat_weight_reduces_to_plain_product(grid1, rng):
    flat = WeightSpec.flat()
    for _ in range(10):
        a = StateVector.random(grid1, flat, rng)
        b = StateVector.random(grid1, flat, rng)
        assert r_inner(a, b) == pytest.approx(plain_inner(a, b), rel=1e-14)


def test_r_inner_matches_explicit_sum(grid2, rel, rng):
    # [DERIVED] explicit loop over the points
    a = StateVector.random(grid2, rel, rng)
    b = StateVector.random(grid2, rel, rng)
    total = 0j
    for pt, x, y in zip(grid2.points(), a.amplitudes.ravel(), b.amplitudes.ravel()):
        total += x * np.conj(y) / math.sqrt(pt @ pt + 1.0)
    assert r_inner(a, b) == pytest.approx(total * grid2.cell_volume, rel=1e-12)


def test_states_on_different_grids_do_not_mix(rel):
    a = StateVector.zeros(GridSpec(1, 0.5, 2.0), rel)
    b = StateVector.zeros(GridSpec(1, 0.25, 2.0), rel)
    with pytest.raises(DimensionMismatchError):
        r_inner(a, b)
    with pytest.raises(DimensionMismatchError):
        a + b
    with pytest.raises(DimensionMismatchError):
        StateVector(GridSpec(1, 0.5, 2.0), rel, np.zeros(3))


def test_embedding_of_plain_states(grid1, rng):
    # [DERIVED] w <= 1/m gives ||phi||_r <= ||phi||_2 / sqrt(m)
    flat = WeightSpec.flat()
    for m in (0.5, 1.0, 4.0):
        phi = StateVector.random(grid1, flat, rng)
        emb = embed_plain_into_r(phi, m)
        assert r_norm(emb) <= plain_norm(phi) / math.sqrt(m) * (1 + 1e-12)
        assert np.array_equal(emb.amplitudes, phi.amplitudes)
    # equality for a delta at the origin
    d = StateVector.delta(grid1, flat)
    assert r_norm(embed_plain_into_r(d, 4.0)) == pytest.approx(plain_norm(d) / 2.0)


# --- Fourier ------------------------------------------------------------------


@pytest.mark.parametrize("dim,h,radius", [(1, 0.1, 5.0), (2, 0.5, 4.0), (3, 1.0, 3.0)])
def test_fourier_round_trip_and_parseval(dim, h, radius, rng):
    g = GridSpec(dim, h, radius)
    flat = WeightSpec.flat()
    for _ in range(5):
        phi = StateVector.random(g, flat, rng)
        pos = fourier(phi, "to_position")
        back = fourier(pos, "to_momentum", momentum_grid=g)
        assert np.max(np.abs(back.amplitudes - phi.amplitudes)) < 1e-12 * np.max(np.abs(phi.amplitudes))
        assert plain_norm(pos) == pytest.approx(plain_norm(phi), rel=1e-12)


def test_fourier_of_gaussian_is_gaussian():
    # [DERIVED] (2 pi)^{-1/2} int exp(-p^2/2) exp(i p x) dp = exp(-x^2/2)
    g = GridSpec(1, 0.1, 20.0)
    phi = StateVector.from_function(g, WeightSpec.flat(), lambda p: np.exp(-p * p / 2))
    pos = fourier(phi, "to_position")
    x = pos.grid.axis
    assert np.max(np.abs(pos.amplitudes - np.exp(-x * x / 2))) < 1e-12


def test_fourier_sign_convention():
    # [DERIVED] a shifted Gaussian exp(-(p-a)^2/2) maps to exp(i a x) exp(-x^2/2)
    g = GridSpec(1, 0.1, 20.0)
    a = 1.5
    phi = StateVector.from_function(g, WeightSpec.flat(), lambda p: np.exp(-(p - a) ** 2 / 2))
    x = fourier(phi).grid.axis
    assert np.max(np.abs(fourier(phi).amplitudes - np.exp(1j * a * x - x * x / 2))) < 1e-12


def test_fourier_rejects_bad_direction(grid1, rel):
    with pytest.raises(ValueError):
        fourier(StateVector.zeros(grid1, rel), "sideways")


def test_state_csv_export(tmp_path):
    g = GridSpec(2, 1.0, 1.0)
    phi = StateVector.from_function(g, WeightSpec.flat(), lambda p1, p2: p1 + 1j * p2)
    path = tmp_path / "state.csv"
    state_to_csv(phi, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "p1", "p2", "re", "im"]
    assert len(rows) == 1 + g.size
    assert [float(v) for v in rows[2][1:]] == [-1.0, 0.0, -1.0, 0.0]


# --- properties ---------------------------------------------------------------

_vectors = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seed=_vectors, mass=st.floats(0.1, 10.0))
def test_property_cauchy_schwarz(seed, mass):
    g = GridSpec(1, 0.5, 4.0)
    w = WeightSpec.relativistic(mass)
    r = np.random.default_rng(seed)
    a, b = StateVector.random(g, w, r), StateVector.random(g, w, r)
    assert abs(r_inner(a, b)) <= r_norm(a) * r_norm(b) * (1 + 1e-12)
    assert r_inner(a, b) == pytest.approx(np.conj(r_inner(b, a)), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=_vectors, mass=st.floats(0.1, 10.0), dim=st.integers(1, 3))
def test_property_weight_is_radial(seed, mass, dim):
    # w(Pp) = w(p) for an orthogonal P
    r = np.random.default_rng(seed)
    q, _ = np.linalg.qr(r.standard_normal((dim, dim)))
    p = r.standard_normal((dim, 8)) * 5
    w = WeightSpec.relativistic(mass)
    assert np.allclose(w.evaluate(*(q @ p)), w.evaluate(*p), rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(dim=st.integers(1, 3), n_side=st.integers(1, 4), h=st.sampled_from([0.125, 0.25, 0.5, 1.0]))
def test_property_grid_enumeration(dim, n_side, h):
    g = GridSpec(dim, h, n_side * h)
    pts = g.points()
    assert len({tuple(p) for p in pts}) == g.size == (2 * n_side + 1) ** dim
    assert np.all(np.abs(pts) <= g.radius + 1e-12)
    # row-major: lexicographically sorted
    assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)
