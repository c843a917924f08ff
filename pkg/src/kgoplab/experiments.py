"""Reproducible desk-scale experiments and their config schema.

Each experiment takes a dict of typed parameters and an executor, and
returns an :class:`Outcome` holding CSV rows and named checks.  Ladder points
may run concurrently; results are gathered in ladder order, so outputs do not
depend on the thread count.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
import scipy.special

from . import __version__
from .operators import (
    ConvolutionOp,
    Identity,
    PositionOp,
    Resolvent,
    TranslationOp,
    TranslationSum,
    bump_kernel,
    gaussian_kernel,
    gaussian_mixture_kernel,
)
from .space import GridSpec, LatticeSpec, StateVector, WeightSpec
from .spectral import (
    build_subspace,
    compactness_probe,
    loglog_slope,
    operator_norm,
    principal_angles,
    translation_norm_exact,
)
from .summability import bump, cesaro_mean, fejer_mean_values, operator_derivative
from .symbols import (
    band_limited_symbol,
    gelfand_evaluation,
    interval_counterexample,
    inverse_symbol,
    lemma36_bound,
    sup_norm_oversampled,
    support_preservation_check,
    torus_symbol,
)

__all__ = [
    "Param",
    "Check",
    "Outcome",
    "EXPERIMENTS",
    "ConfigError",
    "ValidationReport",
    "default_config_text",
    "load_config",
    "resolve_params",
    "params_from_mapping",
    "validate_config",
    "render_csv",
]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""

    def __init__(self, errors: Sequence[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# --- schema -----------------------------------------------------------------


def _positive(v) -> Optional[str]:
    return None if v > 0 else "must be positive"


def _nonnegative(v) -> Optional[str]:
    return None if v >= 0 else "must be nonnegative"


def _positive_list(v) -> Optional[str]:
    if not v:
        return "must not be empty"
    return None if all(x > 0 for x in v) else "entries must be positive"


def _nonempty(v) -> Optional[str]:
    return None if len(v) else "must not be empty"


@dataclass(frozen=True)
class Param:
    """One config key: its type, default text and range check."""

    kind: str
    check: Optional[Callable[[Any], Optional[str]]] = None
    choices: tuple = ()

    def parse(self, text: str):
        text = text.strip()
        if self.kind == "int":
            return int(text)
        if self.kind == "float":
            return float(text)
        if self.kind == "bool":
            low = text.lower()
            if low in ("1", "yes", "true", "on"):
                return True
            if low in ("0", "no", "false", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if self.kind == "ints":
            return [int(x) for x in text.split(",") if x.strip()]
        if self.kind == "floats":
            return [float(x) for x in text.split(",") if x.strip()]
        if self.kind == "str":
            if self.choices and text not in self.choices:
                raise ValueError(f"must be one of {', '.join(self.choices)}")
            return text
        raise AssertionError(self.kind)


MASS = Param("float", lambda v: None if v > 0 and math.isfinite(v) else "mass must be positive")
POS = Param("float", _positive)
POS_INT = Param("int", _positive)
NONNEG_INT = Param("int", _nonnegative)
FLOAT = Param("float")
INTS = Param("ints", _positive_list)
ORDERS = Param("ints", lambda v: "must not be empty" if not v else (None if all(x >= 0 for x in v) else "N must be nonnegative"))
FLOATS = Param("floats", _nonempty)
POS_FLOATS = Param("floats", _positive_list)
BOOL = Param("bool")
WEIGHT = Param("str", choices=("relativistic", "quadratic", "flat"))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class Outcome:
    header: list
    rows: list
    checks: list
    converged: bool = True
    summary: dict = field(default_factory=dict)
    grids: list = field(default_factory=list)


@dataclass(frozen=True)
class Experiment:
    name: str
    schema: dict
    func: Callable[[dict, Executor], Outcome]
    grid_pairs: tuple = ()
    description: str = ""


EXPERIMENTS: dict[str, Experiment] = {}


def experiment(name: str, schema: dict, grid_pairs: tuple = (), description: str = ""):
    def register(func):
        EXPERIMENTS[name] = Experiment(name, schema, func, grid_pairs, description)
        return func

    return register


def _pmap(pool: Executor, fn, items):
    return list(pool.map(fn, items))


def _weight(params: dict) -> WeightSpec:
    kind = params.get("weight_kind", "relativistic")
    if kind == "relativistic":
        return WeightSpec.relativistic(params["mass"])
    return WeightSpec.from_config({"weight_kind": kind})


def _slope_check(name: str, slope: float, center: float, tol: float) -> Check:
    return Check(name, abs(slope - center) <= tol, f"slope {slope:.6f}, target {center} +- {tol}")


# --- experiments --------------------------------------------------------------


@experiment(
    "norm-growth",
    {
        "mass": MASS,
        "ladder": INTS,
        "slope_center": FLOAT,
        "slope_tol": POS,
        "power_check": BOOL,
        "power_spacing": POS,
        "power_radius": POS,
        "power_tol": POS,
        "max_iter": POS_INT,
    },
    grid_pairs=(("power_spacing", "power_radius"),),
    description="square-root growth of translation norms",
)
def _norm_growth(p: dict, pool: Executor) -> Outcome:
    ks = p["ladder"]
    norms = _pmap(pool, lambda k: translation_norm_exact(float(k), p["mass"]), ks)
    slope = loglog_slope(ks, norms)
    rows = [[k, p["mass"], v, v / math.sqrt(k), slope] for k, v in zip(ks, norms)]
    golden = math.sqrt((1 + math.sqrt(5)) / 2)
    unit = translation_norm_exact(1.0, p["mass"])
    checks = [_slope_check("slope", slope, p["slope_center"], p["slope_tol"])]
    if p["mass"] == 1.0:
        checks.append(Check("unit_shift", abs(unit - golden) <= 1e-3, f"|T_1| = {unit:.8f}, sqrt(golden) = {golden:.8f}"))
    converged = True
    grids = []
    summary = {"slope": slope, "unit_norm": unit}
    if p["power_check"]:
        grid = GridSpec(1, p["power_spacing"], p["power_radius"])
        est = operator_norm(
            TranslationOp(grid, 1.0), WeightSpec.relativistic(p["mass"]), tol=p["power_tol"], max_iter=p["max_iter"]
        )
        converged = est.converged
        summary["power_norm"] = est.value
        checks.append(Check("power_iteration", abs(est.value - unit) <= 1e-3, f"power {est.value:.8f} vs exact {unit:.8f}"))
        grids.append(grid.to_config())
    return Outcome(["k", "mass", "norm_exact", "norm_over_sqrt_k", "slope"], rows, checks, converged, summary, grids)


@experiment(
    "lemma36",
    {
        "seed": NONNEG_INT,
        "count": POS_INT,
        "dims": Param("ints", lambda v: None if v and all(d in (1, 2) for d in v) else "dims must be 1 or 2"),
        "spacing_1d": POS,
        "radius_1d": POS,
        "spacing_2d": POS,
        "radius_2d": POS,
        "mass": MASS,
        "components": POS_INT,
    },
    grid_pairs=(("spacing_1d", "radius_1d"), ("spacing_2d", "radius_2d")),
    description="weighted-L1 bound against the operator norm of K_f",
)
def _lemma36(p: dict, pool: Executor) -> Outcome:
    weight = WeightSpec.relativistic(p["mass"])

    def one(idx: int):
        dim = p["dims"][idx % len(p["dims"])]
        key = "1d" if dim == 1 else "2d"
        grid = GridSpec(dim, p[f"spacing_{key}"], p[f"radius_{key}"])
        rng = np.random.default_rng([p["seed"], idx])
        func, _ = gaussian_mixture_kernel(rng, dim, p["components"])
        op = ConvolutionOp.from_function(grid, func)
        est = operator_norm(op, weight, method="arpack", tol=1e-12)
        bound = lemma36_bound(op.kernel, grid, p["mass"])
        return [idx, dim, grid.spacing, grid.radius, p["mass"], est.value, bound.value, bound.value - est.value,
                bound.tail_fraction, int(bound.diverged)]

    rows = _pmap(pool, one, range(p["count"]))
    worst = min(r[7] for r in rows)
    diverged = sum(r[9] for r in rows)
    checks = [
        Check("bound_dominates", worst > 0, f"smallest margin {worst:.6e}"),
        Check("no_divergence", diverged == 0, f"{diverged} diverged sums"),
    ]
    header = ["index", "dim", "spacing", "radius", "mass", "norm", "bound", "margin", "tail_fraction", "diverged"]
    return Outcome(header, rows, checks, summary={"min_margin": worst})


def _fejer_operator(lattice: LatticeSpec, symbol: str, amplitude: float) -> ConvolutionOp:
    big = GridSpec(lattice.dim, 1.0, 2.0 * lattice.cutoff)
    m = np.abs(big.axis)
    if symbol == "exp_cos":
        coeff = scipy.special.iv(m, amplitude).astype(complex)
    elif symbol == "two_plus_cos":
        coeff = np.where(m == 0, 2.0, np.where(m == 1, 0.5, 0.0)).astype(complex)
    else:
        coeff = np.zeros(m.shape, dtype=complex)
    return ConvolutionOp(lattice, coeff, tag=f"{symbol}:{amplitude!r}")


@experiment(
    "fejer",
    {
        "cutoff": POS_INT,
        "mass": MASS,
        "symbol": Param("str", choices=("exp_cos", "two_plus_cos", "zero")),
        "amplitude": FLOAT,
        "orders": ORDERS,
        "rel_target": POS,
        "identity_shift": Param("int"),
        "identity_order": NONNEG_INT,
        "seed": NONNEG_INT,
    },
    description="Cesàro means on the lattice model",
)
def _fejer(p: dict, pool: Executor) -> Outcome:
    if p["cutoff"] > 1000:
        raise ConfigError(["fejer.cutoff: at most 1000 (dense norms)"])
    lattice = LatticeSpec(1, p["cutoff"])
    weight = WeightSpec.relativistic(p["mass"])
    op = _fejer_operator(lattice, p["symbol"], p["amplitude"])
    norm_a = operator_norm(op, weight, method="dense").value
    sym = torus_symbol(op).sample()

    def one(n: int):
        tau = cesaro_mean(op, n)
        err = operator_norm(tau - op, weight, method="dense").value
        tau_sym = torus_symbol(tau, check=False).evaluate(*sym.grid.mesh())
        sym_res = float(np.max(np.abs(tau_sym - fejer_mean_values(sym.values, n))))
        return err, sym_res

    results = _pmap(pool, one, p["orders"])
    rows = []
    for n, (err, sym_res) in zip(p["orders"], results):
        rel = err / norm_a if norm_a > 0 else 0.0
        rows.append([n, p["cutoff"], p["mass"], err, norm_a, rel, sym_res])
    errs = [r[3] for r in rows]
    if all(e == 0.0 for e in errs):
        decreasing = True
    else:
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    # exact coefficient rule against the quadrature path on a random probe
    shift, order = p["identity_shift"], p["identity_order"]
    t = TranslationOp(lattice, float(shift))
    factor = max(0.0, 1.0 - abs(shift) / (order + 1))
    rng = np.random.default_rng(p["seed"])
    probe = StateVector.random(lattice, weight, rng)
    quad = cesaro_mean(t, order, method="quadrature").apply(probe)
    ident = (quad - factor * t.apply(probe)).r_norm() / probe.r_norm()
    checks = [
        Check("strictly_decreasing", decreasing, "errors " + ", ".join(f"{e:.3e}" for e in errs)),
        Check("final_relative_error", rows[-1][5] < p["rel_target"], f"{rows[-1][5]:.4e} < {p['rel_target']}"),
        Check("coefficient_identity", ident < 1e-12, f"residual {ident:.3e}"),
        Check("symbol_compatibility", max(r[6] for r in rows) < 1e-8, f"max {max(r[6] for r in rows):.3e}"),
    ]
    header = ["N", "cutoff", "mass", "error", "norm_A", "relative_error", "symbol_residual"]
    return Outcome(header, rows, checks, summary={"norm_A": norm_a}, grids=[lattice.to_config()])


@experiment(
    "subspace-angles",
    {
        "weight_kind": WEIGHT,
        "mass": MASS,
        "spacing": POS,
        "radii": POS_FLOATS,
        "s_lo": FLOAT,
        "s_hi": FLOAT,
        "t_lo": FLOAT,
        "t_hi": FLOAT,
        "threshold": POS,
        "report": POS_INT,
    },
    description="principal angles between spectral subspaces of disjoint intervals",
)
def _subspace_angles(p: dict, pool: Executor) -> Outcome:
    weight = _weight(p)
    for r in p["radii"]:
        _check_grid_ratio("subspace-angles", "spacing", "radii", p["spacing"], r)

    def one(radius: float):
        grid = GridSpec(1, p["spacing"], radius)
        bs = build_subspace(grid, weight, (p["s_lo"], p["s_hi"]))
        bt = build_subspace(grid, weight, (p["t_lo"], p["t_hi"]))
        return principal_angles(bs, bt)

    reports = _pmap(pool, one, p["radii"])
    rows = []
    for radius, rep in zip(p["radii"], reports):
        for i, c in enumerate(rep.cosines[: p["report"]]):
            rows.append([radius, p["spacing"], p["weight_kind"], p["mass"], rep.dims[0], rep.dims[1],
                         rep.conditions[0], rep.conditions[1], i, float(c)])
    tops = [rep.top for rep in reports]
    detected = [rep.intersection_dimension(p["threshold"]) for rep in reports]
    checks = []
    if p["weight_kind"] == "relativistic":
        checks.append(Check("no_intersection", all(d == 0 for d in detected) and len(reports) >= 2,
                            f"detected dimensions {detected} at radii {p['radii']}"))
    if p["weight_kind"] == "quadratic":
        checks.append(Check("top_cosine_increases", all(b > a for a, b in zip(tops, tops[1:])),
                            "top cosines " + ", ".join(f"{t:.6f}" for t in tops)))
    header = ["radius", "spacing", "weight_kind", "mass", "dim_S", "dim_T", "cond_S", "cond_T", "rank", "cosine"]
    return Outcome(header, rows, checks, summary={"top_cosines": tops},
                   grids=[GridSpec(1, p["spacing"], r).to_config() for r in p["radii"]])


@experiment(
    "resolvent-check",
    {
        "spacing": POS,
        "radius": POS,
        "mass": MASS,
        "z_re": FLOAT,
        "z_im": Param("float", lambda v: None if v != 0 else "imaginary part must be nonzero"),
        "centers": FLOATS,
        "width": POS,
        "tol": POS,
    },
    grid_pairs=(("spacing", "radius"),),
    description="resolvent of the position operator on Gaussian probes",
)
def _resolvent_check(p: dict, pool: Executor) -> Outcome:
    grid = GridSpec(1, p["spacing"], p["radius"])
    weight = WeightSpec.relativistic(p["mass"])
    z = complex(p["z_re"], p["z_im"])
    q = PositionOp(grid, 0)
    res = Resolvent(grid, z, 0)

    def one(c: float):
        phi = StateVector.from_function(grid, weight, lambda x: np.exp(-((x - c) / p["width"]) ** 2))
        rphi = res.apply(phi)
        fwd = (q.apply(rphi) - z * rphi - phi).r_norm() / phi.r_norm()
        bwd = (res.apply(q.apply(phi) - z * phi) - phi).r_norm() / phi.r_norm()
        return fwd, bwd

    out = _pmap(pool, one, p["centers"])
    rows = [[c, grid.spacing, grid.radius, p["mass"], z.real, z.imag, f, b] for c, (f, b) in zip(p["centers"], out)]
    worst_f = max(f for f, _ in out)
    worst_b = max(b for _, b in out)
    checks = [
        Check("left_inverse", worst_f < p["tol"], f"max |(Q - z)R phi - phi| / |phi| = {worst_f:.3e}"),
        Check("right_inverse", worst_b < p["tol"], f"max |R(Q - z) phi - phi| / |phi| = {worst_b:.3e}"),
    ]
    header = ["center", "spacing", "radius", "mass", "z_re", "z_im", "residual_left", "residual_right"]
    return Outcome(header, rows, checks, grids=[grid.to_config()])


@experiment(
    "eigenresidual",
    {
        "spacing": POS,
        "radius": POS,
        "mass": MASS,
        "a": FLOAT,
        "ladder": INTS,
        "backend": Param("str", choices=("difference", "spectral")),
        "slope_center": FLOAT,
        "slope_tol": POS,
    },
    grid_pairs=(("spacing", "radius"),),
    description="approximate eigenvectors exp(i a p) exp(-p^2/k) of the position operator",
)
def _eigenresidual(p: dict, pool: Executor) -> Outcome:
    grid = GridSpec(1, p["spacing"], p["radius"])
    weight = WeightSpec.relativistic(p["mass"])
    q = PositionOp(grid, 0, p["backend"])
    a = p["a"]

    def one(k: int):
        f = StateVector.from_function(grid, weight, lambda x: np.exp(1j * a * x - x * x / k))
        # with Q = i d/dp the eigenvalue of this family is -a
        return (q.apply(f) + a * f).r_norm() / f.r_norm()

    res = _pmap(pool, one, p["ladder"])
    slope = loglog_slope(p["ladder"], res)
    rows = [[k, a, -a, grid.spacing, grid.radius, p["mass"], r, slope] for k, r in zip(p["ladder"], res)]
    checks = [_slope_check("slope", slope, p["slope_center"], p["slope_tol"])]
    header = ["k", "a", "eigenvalue", "spacing", "radius", "mass", "residual", "slope"]
    return Outcome(header, rows, checks, summary={"slope": slope}, grids=[grid.to_config()])


@experiment(
    "theorem38",
    {
        "spacing": POS,
        "margin": POS,
        "mass": MASS,
        "order": POS_INT,
        "band": POS,
        "ladder": INTS,
        "slope_center": FLOAT,
        "slope_tol": POS,
        "tol": POS,
    },
    description="derivative norms of inverse symbols of modulated band-limited symbols",
)
def _theorem38(p: dict, pool: Executor) -> Outcome:
    weight = WeightSpec.relativistic(p["mass"])
    d, band = p["order"], p["band"]

    for k in p["ladder"]:
        _check_grid_ratio("theorem38", "spacing", "margin", p["spacing"], k + p["margin"])

    def one(k: int):
        grid = GridSpec(1, p["spacing"], k + p["margin"])
        sym = band_limited_symbol(grid, lambda x: k ** (-d) * bump(((x - k) / band) ** 2), k + band)
        op = inverse_symbol(sym)
        for _ in range(d):
            op = operator_derivative(op, 0, method="exact")
        est = operator_norm(op, weight, method="arpack", tol=p["tol"])
        sup = sup_norm_oversampled(op.kernel, op.kernel_grid)
        return est.value, sup, sym.sup_norm() * k**d, grid.radius

    out = _pmap(pool, one, p["ladder"])
    norms = [o[0] for o in out]
    sups = [o[1] for o in out]
    slope = loglog_slope(p["ladder"], norms)
    rows = [[k, p["spacing"], o[3], p["mass"], d, o[0], o[1], o[2], slope] for k, o in zip(p["ladder"], out)]
    spread = max(sups) / min(sups)
    checks = [
        _slope_check("slope", slope, p["slope_center"], p["slope_tol"]),
        Check("symbols_bounded", spread < 2.0, f"derivative-symbol sup ranges over a factor {spread:.6f}"),
    ]
    header = ["k", "spacing", "radius", "mass", "order", "norm", "symbol_sup", "base_symbol_sup", "slope"]
    return Outcome(header, rows, checks, summary={"slope": slope})


@experiment(
    "interval-counterexample",
    {
        "ladder": INTS,
        "j_lo": FLOAT,
        "j_hi": FLOAT,
        "length": POS,
        "period": POS,
        "offset": FLOAT,
        "spacing": POS,
        "mass": MASS,
        "margin": POS,
        "fit_from": POS_INT,
        "slope_center": FLOAT,
        "slope_tol": POS,
        "min_growth": POS,
    },
    description="growth of K_f on spaced interval indicators",
)
def _interval(p: dict, pool: Executor) -> Outcome:
    kwargs = dict(
        interval=(p["j_lo"], p["j_hi"]), length=p["length"], spacing=p["period"], offset=p["offset"],
        h=p["spacing"], mass=p["mass"], margin=p["margin"],
    )
    try:
        interval_counterexample([1], **kwargs)
    except ValueError as exc:
        raise ConfigError([f"interval-counterexample: {exc}"]) from exc
    tables = _pmap(pool, lambda n: interval_counterexample([n], **kwargs), p["ladder"])
    ratios = [t.ratios[0] for t in tables]
    harm = [t.harmonic[0] for t in tables]
    fit = [i for i, n in enumerate(p["ladder"]) if n >= p["fit_from"]]
    slope = float(np.polyfit(np.log([harm[i] for i in fit]), np.log([ratios[i] for i in fit]), 1)[0]) if len(fit) >= 2 else float("nan")
    growth = ratios[fit[-1]] / ratios[fit[0]] if fit else float("nan")
    rows = [[n, h, r, p["spacing"], p["mass"], p["length"], p["period"], p["offset"], slope]
            for n, h, r in zip(p["ladder"], harm, ratios)]
    checks = [
        Check("monotone", all(b > a for a, b in zip(ratios, ratios[1:])), "ratios " + ", ".join(f"{r:.6f}" for r in ratios)),
        _slope_check("harmonic_exponent", slope, p["slope_center"], p["slope_tol"]),
        Check("growth", growth >= p["min_growth"], f"last/first fitted ratio {growth:.4f} >= {p['min_growth']}"),
    ]
    header = ["N", "harmonic", "ratio", "spacing", "mass", "length", "period", "offset", "slope"]
    return Outcome(header, rows, checks, summary={"slope": slope, "growth": growth})


@experiment(
    "compactness-probe",
    {
        "kernel_width": POS,
        "radii": POS_FLOATS,
        "spacing": POS,
        "refine_spacing": POS,
        "mass": MASS,
        "count": POS_INT,
        "tail_index": POS_INT,
        "top_tol": POS,
    },
    description="singular values of the tilde-transported commutator difference",
)
def _compactness(p: dict, pool: Executor) -> Outcome:
    for r in p["radii"]:
        _check_grid_ratio("compactness-probe", "spacing", "radii", p["spacing"], r)
        _check_grid_ratio("compactness-probe", "refine_spacing", "radii", p["refine_spacing"], r)
    if len(p["radii"]) < 2:
        raise ConfigError(["compactness-probe.radii: need at least two radii"])
    if p["tail_index"] >= p["count"]:
        raise ConfigError(["compactness-probe.tail_index: must be below count"])
    f = gaussian_kernel(0.0, p["kernel_width"])
    rel = WeightSpec.relativistic(p["mass"])
    jobs = [(r, p["spacing"], rel) for r in p["radii"]]
    jobs.append((p["radii"][0], p["refine_spacing"], rel))
    jobs.append((p["radii"][0], p["spacing"], WeightSpec.flat()))

    def one(job):
        r, h, w = job
        return compactness_probe(f, radii=(r,), spacing=h, weight=w, count=p["count"]).singular_values[0]

    svs = _pmap(pool, one, jobs)
    rows = []
    for (r, h, w), s in zip(jobs, svs):
        for i, v in enumerate(s):
            rows.append([r, h, w.name, p["mass"], i, float(v)])
    top = [s[0] for s in svs[: len(p["radii"])]]
    change = abs(top[-1] - top[-2]) / top[-2]
    ti = p["tail_index"] - 1
    tail_base = svs[0][ti] / svs[0][0]
    tail_fine = svs[len(p["radii"])][ti] / svs[len(p["radii"])][0]
    flat_max = float(np.max(svs[-1])) if len(svs[-1]) else 0.0
    checks = [
        Check("top_stable", change < p["top_tol"], f"relative change {change:.3e} between the last two radii"),
        Check("tail_decreases_on_refinement", tail_fine < tail_base,
              f"s_{p['tail_index']}/s_1: {tail_base:.6f} at h={p['spacing']}, {tail_fine:.6f} at h={p['refine_spacing']}"),
        Check("flat_weight_vanishes", flat_max < 1e-12, f"largest singular value {flat_max:.3e}"),
    ]
    header = ["radius", "spacing", "weight_kind", "mass", "index", "singular_value"]
    return Outcome(header, rows, checks, summary={"top": top, "change": change})


@experiment(
    "support-check",
    {
        "spacing": POS,
        "radius": POS,
        "mass": MASS,
        "shifts": FLOATS,
        "probe_starts": FLOATS,
        "probe_length": POS,
    },
    grid_pairs=(("spacing", "radius"),),
    description="lower-support preservation by translations and one-sided convolutions",
)
def _support(p: dict, pool: Executor) -> Outcome:
    grid = GridSpec(1, p["spacing"], p["radius"])
    weight = WeightSpec.relativistic(p["mass"])
    half = p["probe_length"] / 2
    probes = [
        StateVector.from_function(grid, weight, bump_kernel(half, s + half)) for s in p["probe_starts"]
    ]
    cases = []
    for a in p["shifts"]:
        cases.append((f"T({a!r})", TranslationOp(grid, a), a >= 0))
    cases.append(("K(bump on [0,2])", ConvolutionOp.from_function(grid, bump_kernel(1.0, 1.0)), True))
    cases.append(("K(bump on [-2,0])", ConvolutionOp.from_function(grid, bump_kernel(1.0, -1.0)), False))
    cases.append(("T(0.5)+2T(1.0)", TranslationSum(grid, [(1.0, 0.5), (2.0, 1.0)]), True))
    cases.append(("identity", Identity(grid), True))
    reports = _pmap(pool, lambda c: support_preservation_check(c[1], probes), cases)
    rows = [[label, int(expected), int(rep.passed), min(rep.margins), grid.spacing, grid.radius, p["mass"]]
            for (label, _, expected), rep in zip(cases, reports)]
    bad = [label for (label, _, expected), rep in zip(cases, reports) if rep.passed != expected]
    checks = [Check("expected_outcomes", not bad, "mismatches: " + (", ".join(bad) if bad else "none"))]
    header = ["operator", "expected", "passed", "min_margin", "spacing", "radius", "mass"]
    return Outcome(header, rows, checks, grids=[grid.to_config()])


@experiment(
    "gelfand",
    {
        "cutoff": POS_INT,
        "mass": MASS,
        "seed": NONNEG_INT,
        "pairs": POS_INT,
        "terms": POS_INT,
        "max_shift": POS_INT,
        "points": POS_INT,
    },
    description="evaluation characters of the lattice model",
)
def _gelfand(p: dict, pool: Executor) -> Outcome:
    if 2 * p["max_shift"] >= p["cutoff"]:
        raise ConfigError(["gelfand.max_shift: products must stay inside the lattice (2*max_shift < cutoff)"])
    lattice = LatticeSpec(1, p["cutoff"])
    rng = np.random.default_rng(p["seed"])

    def random_sum():
        shifts = rng.integers(-p["max_shift"], p["max_shift"] + 1, size=p["terms"])
        coeffs = rng.standard_normal(p["terms"]) + 1j * rng.standard_normal(p["terms"])
        return TranslationSum(lattice, list(zip(coeffs, shifts.astype(float))))

    pairs = [(random_sum(), random_sum()) for _ in range(p["pairs"])]
    xs = rng.uniform(-math.pi, math.pi, size=p["points"])
    rows = []
    worst = 0.0
    for i, (a, b) in enumerate(pairs):
        for x in xs:
            wa, wb, wab = (gelfand_evaluation(op, x) for op in (a, b, a @ b))
            err = abs(wab - wa * wb)
            worst = max(worst, err)
            rows.append([i, float(x), wa.real, wa.imag, wb.real, wb.imag, wab.real, wab.imag, err, p["cutoff"]])
    unit = max(abs(abs(gelfand_evaluation(TranslationOp(lattice, 1.0), x)) - 1.0) for x in xs)
    trans = max(abs(gelfand_evaluation(TranslationOp(lattice, float(s)), x) - np.exp(1j * s * x))
                for s in range(-p["max_shift"], p["max_shift"] + 1) for x in xs)
    ident = max(abs(gelfand_evaluation(Identity(lattice), x) - 1.0) for x in xs)
    checks = [
        Check("multiplicative", worst < 1e-10, f"max |w(AB) - w(A)w(B)| = {worst:.3e}"),
        Check("unit_circle", unit < 1e-12, f"max ||w(T_e)| - 1| = {unit:.3e}"),
        Check("translation_characters", trans < 1e-12, f"max |w(T_a) - exp(i a x)| = {trans:.3e}"),
        Check("identity", ident < 1e-12, f"max |w(I) - 1| = {ident:.3e}"),
    ]
    header = ["pair", "x", "wA_re", "wA_im", "wB_re", "wB_im", "wAB_re", "wAB_im", "error", "cutoff"]
    return Outcome(header, rows, checks, grids=[lattice.to_config()])


# --- config handling ----------------------------------------------------------


def _check_grid_ratio(section: str, hkey: str, rkey: str, h: float, r: float) -> None:
    ratio = r / h
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError([f"{section}.{rkey}: radius/spacing must be an integer ({r!r}/{h!r})"])


def default_config_text() -> str:
    return resources.files("kgoplab").joinpath("default.cfg").read_text()


def load_config(path=None) -> configparser.ConfigParser:
    """Parse a config file; ``None`` loads the shipped defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if path is None:
            parser.read_string(default_config_text())
        else:
            with open(path) as fh:
                parser.read_file(fh)
    except (configparser.Error, OSError, UnicodeDecodeError) as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    return parser


def _section_values(name: str, parser: configparser.ConfigParser, overrides: Mapping[str, str]) -> dict:
    defaults = load_config(None)
    raw = dict(defaults[name]) if defaults.has_section(name) else {}
    if parser.has_section(name):
        raw.update(parser[name])
    for key, value in overrides.items():
        sec, _, k = key.rpartition(".")
        if sec in ("", name):
            raw[k] = value
    return raw


def _validate_section(exp: Experiment, raw: Mapping[str, str]) -> tuple[dict, list]:
    errors = []
    params = {}
    for key in raw:
        if key not in exp.schema:
            errors.append(f"{exp.name}.{key}: unknown key")
    for key, param in exp.schema.items():
        if key not in raw:
            errors.append(f"{exp.name}.{key}: missing")
            continue
        try:
            value = param.parse(raw[key])
        except ValueError as exc:
            errors.append(f"{exp.name}.{key}: {exc}")
            continue
        if param.check is not None:
            msg = param.check(value)
            if msg:
                errors.append(f"{exp.name}.{key}: {msg}")
                continue
        params[key] = value
    for hkey, rkey in exp.grid_pairs:
        if hkey in params and rkey in params:
            h, r = params[hkey], params[rkey]
            ratio = r / h
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                errors.append(f"{exp.name}.{rkey}: radius/spacing must be an integer ({r!r}/{h!r})")
    for lkey in ("radii",):
        if lkey in params and "spacing" in params:
            for r in params[lkey]:
                ratio = r / params["spacing"]
                if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                    errors.append(f"{exp.name}.{lkey}: radius/spacing must be an integer ({r!r}/{params['spacing']!r})")
    return params, errors


def parse_overrides(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError([f"override {item!r} is not of the form key=value"])
        out[key.strip()] = value.strip()
    return out


def resolve_params(name: str, config_path=None, overrides: Optional[Mapping[str, str]] = None) -> tuple[dict, dict]:
    """Typed parameters and their raw text for one experiment.

    Raises
    ------
    KeyError
        Unknown experiment.
    ConfigError
        Any schema violation.
    """
    exp = EXPERIMENTS[name]
    parser = load_config(config_path)
    raw = _section_values(name, parser, overrides or {})
    params, errors = _validate_section(exp, raw)
    if errors:
        raise ConfigError(errors)
    return params, {k: raw[k] for k in sorted(exp.schema)}


def params_from_mapping(name: str, raw: Mapping[str, str]) -> tuple[dict, dict]:
    """Typed parameters from a complete key-value mapping, as stored in a manifest."""
    exp = EXPERIMENTS[name]
    raw = {k: str(v) for k, v in raw.items()}
    params, errors = _validate_section(exp, raw)
    if errors:
        raise ConfigError(errors)
    return params, {k: raw[k] for k in sorted(exp.schema)}


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    errors: tuple[str, ...]

    def __str__(self) -> str:
        if self.valid:
            return "config is valid"
        return "\n".join(self.errors)


def validate_config(path=None) -> ValidationReport:
    """Schema and range check of every section; runs no computation."""
    try:
        parser = load_config(path)
    except ConfigError as exc:
        return ValidationReport(False, tuple(exc.errors))
    errors = []
    for section in parser.sections():
        if section not in EXPERIMENTS:
            errors.append(f"{section}: unknown experiment section")
    for name, exp in EXPERIMENTS.items():
        raw = _section_values(name, parser, {})
        errors.extend(_validate_section(exp, raw)[1])
    return ValidationReport(not errors, tuple(errors))


# --- output -------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def build_manifest(name: str, raw: dict, outcome: Outcome, csv_name: str, csv_text: str, status: str) -> dict:
    ladder_key = next((k for k in ("ladder", "orders", "radii", "centers", "shifts") if k in raw), None)
    return {
        "experiment": name,
        "tool_version": __version__,
        "config": raw,
        "weight": {"weight_kind": raw.get("weight_kind", "relativistic"), "mass": raw.get("mass")},
        "seed": raw.get("seed"),
        "ladder": {ladder_key: raw[ladder_key]} if ladder_key else {},
        "grids": outcome.grids,
        "outputs": {"csv": {"path": csv_name, "sha256": sha256_text(csv_text)}},
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in outcome.checks],
        "converged": outcome.converged,
        "status": status,
    }


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
