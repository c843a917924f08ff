"""Symbol map, inverse symbols, the weighted-L1 bound, the interval construction and ideals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgoplab.operators import (
    ConvolutionOp,
    FlipConjugate,
    Identity,
    Multiplication,
    TranslationOp,
    TranslationSum,
    bump_kernel,
    gaussian_kernel,
)
from kgoplab.space import GridSpec, LatticeSpec, StateVector, WeightSpec
from kgoplab.spectral import operator_norm, translation_norm_exact
from kgoplab.summability import MollifierFamily, bump, cesaro_mean, fejer_mean_values
from kgoplab.symbols import (
    BandLimitError,
    NotAMultiplierError,
    SymbolFunction,
    band_limited_symbol,
    gelfand_evaluation,
    ideal_membership,
    interval_counterexample,
    inverse_symbol,
    kernel_from_symbol,
    lemma36_bound,
    sup_norm_oversampled,
    support_preservation_check,
    symbol_of,
    torus_symbol,
)

GRID = GridSpec(1, 0.1, 20.0)


# --- symbol map ---------------------------------------------------------------


def test_symbol_of_identity_is_one():
    assert symbol_of(Identity(GRID)).max_deviation(lambda x: np.ones_like(x)) < 1e-12


@pytest.mark.parametrize("a", [0.5, -1.3, 2.0])
def test_symbol_of_translation_is_character(a):
    sym = symbol_of(TranslationOp(GRID, a))
    assert sym.max_deviation(lambda x: np.exp(1j * a * x)) < 1e-10


def test_symbol_of_gaussian_convolution():
    # [DERIVED] int exp(-p^2) exp(i p x) dp = sqrt(pi) exp(-x^2/4)
    sym = symbol_of(ConvolutionOp.from_function(GRID, gaussian_kernel()))
    assert sym.max_deviation(lambda x: math.sqrt(math.pi) * np.exp(-x * x / 4)) < 1e-10


def test_symbol_of_shifted_gaussian():
    # [DERIVED] a kernel centered at c picks up exp(i c x)
    c, s = 0.7, 0.5
    sym = symbol_of(ConvolutionOp.from_function(GRID, gaussian_kernel(c, s)))
    ref = lambda x: s * math.sqrt(math.pi) * np.exp(-(s * x) ** 2 / 4 + 1j * c * x)  # noqa: E731
    assert sym.max_deviation(ref) < 1e-10


def test_multiplication_is_not_a_multiplier_on_position_side():
    op = Multiplication.from_function(GRID, lambda p: np.exp(-(p**2)))
    with pytest.raises(NotAMultiplierError) as err:
        symbol_of(op)
    assert err.value.residual > 1e-4


def _families():
    return [
        TranslationOp(GRID, 1.0),
        ConvolutionOp.from_function(GRID, gaussian_kernel(0.3, 0.8, 1 - 1j)),
        ConvolutionOp.from_function(GRID, bump_kernel(1.5, -0.2, modulation=0.4)),
        TranslationSum(GRID, [(0.5, 1.0), (0.25j, -2.0)]),
        ConvolutionOp.from_function(GRID, gaussian_kernel(0.0, 0.6)) @ TranslationOp(GRID, 0.5),
    ]


def test_symbol_contractive_on_families(rel):
    for op in _families():
        sup = symbol_of(op).sup_norm()
        assert sup <= operator_norm(op, rel, method="dense").value * (1 + 1e-10)


def test_symbol_homomorphism_and_flip():
    ops = _families()
    for a in ops:
        sa = symbol_of(a)
        assert symbol_of(FlipConjugate(a)).max_deviation(
            SymbolFunction(sa.grid, np.conj(sa.values), sa.mask)) < 1e-8
        for b in ops[:3]:
            sb = symbol_of(b)
            prod = SymbolFunction(sa.grid, sa.values * sb.values, sa.mask & sb.mask)
            assert symbol_of(a @ b).max_deviation(prod) < 1e-8
            total = SymbolFunction(sa.grid, 2 * sa.values - 1j * sb.values, sa.mask & sb.mask)
            assert symbol_of(2 * a - 1j * b).max_deviation(total) < 1e-8


def test_symbol_window_bounds():
    sym = symbol_of(TranslationOp(GRID, 1.0), window=(0.0, 3.0))
    pts = sym.points()
    assert pts.min() >= 0.0 and pts.max() <= 3.0


# --- torus model --------------------------------------------------------------


def test_torus_symbol_of_translation_sum():
    lat = LatticeSpec(1, 8)
    op = TranslationSum(lat, [(1.0, 0), (0.5, 1), (-0.25j, -3)])
    sym = torus_symbol(op)
    x = np.linspace(-math.pi, math.pi, 17)
    assert np.allclose(sym.evaluate(x), 1 + 0.5 * np.exp(1j * x) - 0.25j * np.exp(-3j * x), atol=1e-14)


def test_torus_symbol_rejects_non_commuting():
    lat = LatticeSpec(1, 8)
    with pytest.raises(NotAMultiplierError):
        torus_symbol(Multiplication.from_function(lat, lambda m: 1.0 + m))


def test_gelfand_characters():
    lat = LatticeSpec(2, 6)
    a = TranslationSum(lat, [(1.0, [1, 0]), (0.3, [0, -2])])
    b = TranslationSum(lat, [(0.5j, [0, 1]), (2.0, [-1, 1])])
    for x in ([0.3, -1.0], [2.0, 0.5]):
        # product of shifts up to 3 stays inside the cutoff for the origin column
        assert gelfand_evaluation(a @ b, x) == pytest.approx(gelfand_evaluation(a, x) * gelfand_evaluation(b, x), abs=1e-12)
        assert gelfand_evaluation(Identity(lat), x) == pytest.approx(1.0)
        assert abs(gelfand_evaluation(TranslationOp(lat, [1, 0]), x)) == pytest.approx(1.0)
        assert gelfand_evaluation(TranslationOp(lat, [0, 2]), x) == pytest.approx(np.exp(2j * x[1]))


def test_fejer_mean_commutes_with_symbol():
    lat = LatticeSpec(1, 20)
    op = TranslationSum(lat, [(1.0, 0), (0.4, 2), (0.7j, -5), (0.1, 9)])
    sym = torus_symbol(op).sample()
    for n in (0, 3, 8):
        lhs = torus_symbol(cesaro_mean(op, n), check=False).evaluate(*sym.grid.mesh())
        assert np.max(np.abs(lhs - fejer_mean_values(sym.values, n))) < 1e-12


def test_translation_norm_far_exceeds_symbol_norm():
    lat = LatticeSpec(1, 300)
    for a in (200, -250, 300):
        sup = torus_symbol(TranslationOp(lat, a)).sup_norm()
        assert sup == pytest.approx(1.0)
        assert translation_norm_exact(a) / sup > 10


# --- inverse symbol -----------------------------------------------------------


def test_constant_symbol_inverts_to_identity(rel, rng):
    grid = GridSpec(1, 0.1, 5.0)
    g = band_limited_symbol(grid, lambda p: np.where(np.abs(p) < 1e-12, 1.0 / grid.spacing, 0.0), grid.spacing)
    assert np.allclose(g.values, 1.0, atol=1e-13)
    phi = StateVector.random(grid, rel, rng)
    assert np.max(np.abs(inverse_symbol(g).apply(phi).amplitudes - phi.amplitudes)) < 1e-12


def test_inverse_symbol_round_trip():
    grid = GridSpec(1, 0.1, 20.0)
    g = band_limited_symbol(grid, bump_kernel(1.0, 0.2, modulation=0.5), 1.5)
    op = inverse_symbol(g)
    sym = symbol_of(op)
    assert sym.max_deviation(g) < 1e-8


def test_band_limit_violations_rejected():
    grid = GridSpec(1, 0.1, 5.0)
    with pytest.raises(BandLimitError):
        band_limited_symbol(grid, gaussian_kernel(), 1.0)
    with pytest.raises(BandLimitError):
        band_limited_symbol(grid, bump_kernel(1.0), 10.0)
    pos = grid.dual()
    with pytest.raises(BandLimitError):
        inverse_symbol(SymbolFunction(pos, np.ones(pos.shape), np.ones(pos.shape, dtype=bool)))


def test_inverse_symbol_norm_ratio_stable_under_refinement(rel):
    # 20 random band-limited symbols: ||sigma^{-1}(g)|| / ||g||_inf is unchanged when h halves
    r = np.random.default_rng(32)
    for _ in range(20):
        band = r.uniform(0.5, 2.0)
        mod = r.uniform(-2.0, 2.0)
        ratios = []
        for h in (0.1, 0.05):
            grid = GridSpec(1, h, 10.0)
            op = inverse_symbol(band_limited_symbol(grid, bump_kernel(band, 0.0, mod), band))
            norm = operator_norm(op, rel, method="dense").value
            ratios.append(norm / sup_norm_oversampled(op.kernel, op.kernel_grid))
        assert abs(ratios[1] / ratios[0] - 1) < 0.05


def test_kernel_from_symbol_inverts_symbol_of_kernel():
    grid = GridSpec(1, 0.25, 10.0)
    f = bump_kernel(2.0)(grid.axis).astype(complex)
    g = band_limited_symbol(grid, bump_kernel(2.0), 2.0)
    assert np.max(np.abs(kernel_from_symbol(g.values, grid) - f)) < 1e-14


# --- weighted-L1 bound --------------------------------------------------------


def test_bound_for_delta_kernel_is_one(rel):
    grid = GridSpec(1, 0.25, 5.0)
    kern = np.zeros(grid.shape)
    kern[grid.index_of(0.0)] = 1.0 / grid.spacing
    est = lemma36_bound(kern, grid)
    assert est.value == pytest.approx(1.0)
    assert not est.diverged
    assert operator_norm(ConvolutionOp(grid, kern), rel, method="dense").value == pytest.approx(1.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_bound_dominates_gaussian_norm(dim, rel):
    grid = GridSpec(dim, 0.25, 4.0 if dim == 1 else 3.0)
    op = ConvolutionOp.from_function(grid, gaussian_kernel(0.5, 0.8, 1j))
    est = lemma36_bound(op.kernel, grid)
    assert not est.diverged
    assert est.value > operator_norm(op, rel, method="dense").value


def test_bound_tends_to_one_along_mollifiers():
    grid = GridSpec(1, 0.01, 2.0)
    fam = MollifierFamily(1)
    vals = [lemma36_bound(fam.kernel(grid, k), grid).value for k in (1, 4, 16, 64)]
    assert all(b > c for b, c in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(1.0, abs=0.01)


def test_bound_flags_heavy_tail():
    grid = GridSpec(1, 0.25, 10.0)
    op = ConvolutionOp.from_function(grid, lambda p: 1.0 / (1.0 + np.abs(p)) ** 1.2)
    assert lemma36_bound(op.kernel, grid).diverged


def test_bound_mass_must_be_positive():
    grid = GridSpec(1, 0.5, 2.0)
    with pytest.raises(ValueError):
        lemma36_bound(np.ones(grid.shape), grid, mass=0.0)


# --- interval construction ----------------------------------------------------


def test_interval_single_block_baseline():
    table = interval_counterexample(ladder=(1,))
    assert len(table.ratios) == 1
    assert 0 < table.ratios[0] < math.inf
    assert table.harmonic == (1.0,)


def test_interval_ratio_grows_with_block_count():
    table = interval_counterexample(ladder=(1, 16, 64))
    assert table.monotone()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"spacing": 5.0},
        {"offset": 0.0},
        {"length": 3.0},
        {"ladder": (0, 4)},
        {"interval": (1.0, 1.0)},
    ],
)
def test_interval_unsafe_parameters_rejected(kwargs):
    with pytest.raises(ValueError):
        interval_counterexample(**kwargs)


# --- support and ideals -------------------------------------------------------


def _probes(grid, weight):
    out = []
    for start in (-3.0, -1.0, 0.5):
        out.append(StateVector.from_function(grid, weight, lambda p, s=start: ((p >= s) & (p <= s + 2)).astype(float)))
    return out


def test_support_preservation(rel):
    grid = GridSpec(1, 0.05, 10.0)
    probes = _probes(grid, rel)
    assert support_preservation_check(TranslationOp(grid, 1.0), probes).passed
    assert support_preservation_check(Identity(grid), probes).passed
    assert not support_preservation_check(TranslationOp(grid, -1.0), probes).passed
    causal = ConvolutionOp.from_function(grid, lambda p: np.where(p >= 0, p * np.exp(-p), 0.0))
    assert support_preservation_check(causal, probes).passed
    acausal = ConvolutionOp.from_function(grid, gaussian_kernel())
    assert not support_preservation_check(acausal, probes).passed


def test_ideal_membership():
    grid = GridSpec(1, 0.25, 100.0)
    x = grid.dual().axis
    member = ConvolutionOp(grid, kernel_from_symbol(bump(((x - 6) / 4) ** 2), grid))
    region = (-1.5, 1.5)
    assert ideal_membership(member, region)
    assert not ideal_membership(Identity(grid), region)
    r = np.random.default_rng(5)
    for _ in range(10):
        a = grid.spacing * r.integers(-40, 40)
        assert ideal_membership(TranslationOp(grid, a) @ member, region)
    assert ideal_membership(member + 2.0 * member, region)


# --- properties ---------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(
    terms=st.lists(
        st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.integers(-4, 4)), min_size=1, max_size=4
    ),
    x=st.floats(-math.pi, math.pi),
)
def test_property_torus_symbol_contractive(terms, x):
    lat = LatticeSpec(1, 8)
    op = TranslationSum(lat, [(complex(re, im), s) for re, im, s in terms])
    sup = torus_symbol(op).sup_norm()
    norm = operator_norm(op, WeightSpec.relativistic(1.0), method="dense").value
    assert sup <= norm * (1 + 1e-10) + 1e-14
    assert abs(gelfand_evaluation(op, x)) <= norm * (1 + 1e-10) + 1e-14
