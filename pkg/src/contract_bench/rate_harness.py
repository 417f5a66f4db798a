"""Contraction-rate experiments: scenarios, theoretical rates, runs and fits.

A scenario bundles an operator, a prior, a truth and an ``n`` grid. For
every ``(n, replicate)`` cell the harness simulates an observation,
computes the posterior (closed form for Gaussian priors, MCMC otherwise)
and records the ``(1 - tau)`` posterior quantile of ``||f - f0||`` together
with the posterior mass outside ``M xi_n``. Rates are fitted by ordinary
least squares on the median radius across replicates.
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from ._seeding import stream
from .errors import ConfigurationError, SamplingError
from .posterior import (
    MCMCConfig,
    conjugate_posterior,
    contraction_radius,
    posterior_mass_outside,
    rjmcmc_sieve_posterior,
    wavelet_posterior_mcmc,
)
from .priors import GaussianPriorSpec, SievePriorSpec, WaveletPriorSpec, prior_from_dict, spec_hash
from .spectral_core import SequenceVector, SpectralOperator, make_operator, simulate_observation
from .wavelets import WaveletCoefficients, required_K, wavelet_synthesis

TRUTH_KINDS = ("finite", "sobolev", "holder")
SOBOLEV_MARGIN = 0.01


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class RateScenario:
    """Everything needed to reproduce one rate experiment.

    ``operator`` is ``{"kind", "params", "K_max"}``; ``prior`` is a prior
    document understood by :func:`prior_from_dict`; ``truth`` is
    ``{"kind": "finite", "coeffs": [...]}``, ``{"kind": "sobolev", "gamma"}``
    or ``{"kind": "holder", "gamma", "J_max"}``. ``M`` scales the
    theoretical rate in the mass-outside column.
    """

    operator: dict
    prior: dict
    truth: dict
    n_grid: tuple
    replicates: int = 1
    tau: float = 0.1
    seed: int = 0
    M: float = 1.0
    draws: int = 4000
    J_max: int = 3
    mcmc: dict = field(default_factory=dict)
    tolerance: float = 0.05

    def __post_init__(self):
        grid = tuple(float(x) for x in self.n_grid)
        if not grid or any(not x > 0 for x in grid):
            raise ConfigurationError("n_grid must hold positive values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigurationError("replicates must be a positive integer")
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError("tau must lie in (0, 1)")
        if self.truth.get("kind") not in TRUTH_KINDS:
            raise ConfigurationError(f"truth kind must be one of {TRUTH_KINDS}")
        for key in ("kind", "K_max"):
            if key not in self.operator:
                raise ConfigurationError(f"operator document needs {key!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "RateScenario":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigurationError(f"unknown scenario keys {sorted(extra)}")
        missing = {"operator", "prior", "truth", "n_grid"} - set(doc)
        if missing:
            raise ConfigurationError(f"scenario is missing required keys {sorted(missing)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d

    def build_operator(self) -> SpectralOperator:
        return make_operator(self.operator["kind"], self.operator.get("params", {}), int(self.operator["K_max"]))

    def build_prior(self):
        return prior_from_dict(self.prior)

    def build_truth(self, K_max: int | None = None) -> SequenceVector:
        K = int(self.operator["K_max"]) if K_max is None else K_max
        return make_truth(self.truth, K)

    def mcmc_config(self) -> MCMCConfig:
        return MCMCConfig(**self.mcmc)


def make_truth(truth: dict, K_max: int) -> SequenceVector:
    """Concrete ``f0`` on ``K_max`` Fourier/SVD coordinates.

    ``sobolev``: ``f_k = k^(-gamma - 1/2 - 0.01)``, which lies in ``H^gamma``
    but not in ``H^(gamma + 0.05)``. ``holder``: wavelet series with
    ``beta_lk = (-1)^k 2^(-l(gamma + 1/2))`` up to level ``J_max``.
    """
    kind = truth.get("kind")
    if kind == "finite":
        c = np.asarray(truth["coeffs"], dtype=float)
        if c.size > K_max:
            raise ConfigurationError(f"finite truth has {c.size} terms but K_max={K_max}")
        out = np.zeros(K_max)
        out[: c.size] = c
        return SequenceVector(out)
    if kind == "sobolev":
        g = float(truth["gamma"])
        if not g > 0:
            raise ConfigurationError("truth smoothness gamma must be positive")
        k = np.arange(1, K_max + 1, dtype=float)
        return SequenceVector(k ** (-g - 0.5 - SOBOLEV_MARGIN))
    if kind == "holder":
        g = float(truth["gamma"])
        J = int(truth.get("J_max", 3))
        if K_max < required_K(J):
            raise ConfigurationError(f"holder truth up to level {J} needs K_max >= {required_K(J)}")
        details = tuple(
            np.where(np.arange(2**l) % 2 == 0, 1.0, -1.0) * 2.0 ** (-l * (g + 0.5)) for l in range(J + 1)
        )
        return wavelet_synthesis(WaveletCoefficients(float(truth.get("scaling", 0.0)), details), K_max)
    raise ConfigurationError(f"unknown truth kind {kind!r}")


# ---------------------------------------------------------------------------
# theoretical rates


@dataclass(frozen=True)
class RateFormula:
    """``xi_n = n^(-exponent) (log n)^log_exponent`` (power model) or
    ``xi_n = (log n)^(-exponent)`` (logarithmic model).

    ``subpolynomial`` marks rates carrying an extra ``exp(c (log n)^s)``
    factor with ``s = subpolynomial``; ``xi`` evaluates it with ``c = 1``.
    """

    case: str
    model: str
    exponent: float
    log_exponent: float = 0.0
    subpolynomial: float | None = None
    descriptor: str = ""

    @property
    def slope(self) -> float:
        """Target slope of ``log r_n`` against the model regressor."""
        return -self.exponent

    def xi(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        ln = np.log(n)
        if self.model == "logarithmic":
            return ln ** (-self.exponent)
        out = n ** (-self.exponent) * ln**self.log_exponent
        if self.subpolynomial is not None:
            out = out * np.exp(ln**self.subpolynomial)
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def _classification(op: SpectralOperator):
    cl = op.classification
    if cl.variant == "custom":
        raise ConfigurationError(
            "operator has no declared ill-posedness; candidate cases: "
            "mild (declare alpha) or severe (declare beta and c0)"
        )
    return cl


def _truth_gamma(truth: dict) -> float:
    return math.inf if truth["kind"] == "finite" else float(truth["gamma"])


def theoretical_rate(scenario: RateScenario) -> RateFormula:
    """Rate predicted for the scenario's (operator, prior, truth) combination."""
    op = scenario.build_operator()
    prior = scenario.build_prior()
    cl = _classification(op)
    gamma = _truth_gamma(scenario.truth)
    finite = scenario.truth["kind"] == "finite"

    if isinstance(prior, GaussianPriorSpec):
        d = prior.delta
        if cl.variant == "mild":
            a = cl.alpha
            e = min(d, gamma) / (2 * a + 2 * d + 1)
            return RateFormula("mild-gaussian", "power", e, 0.0,
                               descriptor=f"n^(-{e:.6g})")
        b = cl.beta
        if not d > b / 2:
            raise ConfigurationError(f"severe Gaussian case needs delta > beta/2 = {b / 2:g}")
        e = min(d - b / 2, gamma) / b
        return RateFormula("severe-gaussian", "logarithmic", e,
                           descriptor=f"(log n)^(-{e:.6g})")

    if isinstance(prior, SievePriorSpec):
        h = prior.h
        if cl.variant == "mild":
            if h.kind not in ("exponential", "stretched") or (h.kind == "stretched" and h.power < 1):
                raise ConfigurationError("mild sieve cases need h(m) with at least exponential decay")
            a = cl.alpha
            if finite:
                return RateFormula("mild-sieve-finite", "power", 0.5, a + 0.5,
                                   descriptor=f"n^(-1/2) (log n)^{a + 0.5:.6g}")
            if h.kind != "exponential":
                raise ConfigurationError("mild sieve with Sobolev truth needs exponential h (two-sided bounds)")
            e = gamma / (2 * a + 2 * gamma + 1)
            eta = (2 * a + 1) * (a + gamma) / (2 * a + 2 * gamma + 1)
            return RateFormula("mild-sieve-sobolev", "power", e, eta,
                               descriptor=f"n^(-{e:.6g}) (log n)^{eta:.6g}")
        b = cl.beta
        need = b + 1
        if not (h.kind == "stretched" and h.power >= need):
            raise ConfigurationError(f"severe sieve cases need 1 - H(m) <~ exp(-b m^{need:g}) (stretched h, power >= {need:g})")
        if finite:
            eta = (2 * cl.alpha0 + b + 1) / (2 * (b + 1))
            s = b / (b + 1)
            return RateFormula("severe-sieve-finite", "power", 0.5, eta, subpolynomial=s,
                               descriptor=f"n^(-1/2) (log n)^{eta:.6g} exp(c (log n)^{s:.6g})")
        if prior.q.family != "gaussian" or prior.tau.kind != "power":
            raise ConfigurationError("severe sieve with Sobolev truth needs Gaussian q and power scales")
        d = prior.tau.delta
        if not d > b / 2:
            raise ConfigurationError(f"severe sieve case needs delta > beta/2 = {b / 2:g}")
        e = min(d - b / 2, gamma) / b
        return RateFormula("severe-sieve-sobolev", "logarithmic", e,
                           descriptor=f"(log n)^(-{e:.6g})")

    if isinstance(prior, WaveletPriorSpec):
        if op.kind != "deconvolution" or cl.variant != "mild":
            raise ConfigurationError("wavelet cases need a mildly ill-posed deconvolution operator")
        if scenario.truth["kind"] == "sobolev":
            raise ConfigurationError("wavelet cases are stated for Hölder truths; candidate truth kinds: holder, finite")
        a, d = cl.alpha, prior.delta
        H = prior.H
        eta_g = lambda g: (2 * a + 1) * (a + g) / (2 * a + 2 * g + 1)
        if H.kind == "stretched":
            nu = H.nu
            if not nu > 1 / d:
                raise ConfigurationError(f"wavelet case needs nu > 1/delta = {1 / d:.6g}")
            dd = d - 1 / nu
            if math.isclose(d, gamma + 1 / nu, rel_tol=1e-12):
                e = gamma / (2 * a + 2 * gamma + 1)
                return RateFormula("wavelet-stretched-boundary", "power", e, eta_g(gamma),
                                   descriptor=f"n^(-{e:.6g}) (log n)^{eta_g(gamma):.6g}")
            if d < gamma + 1 / nu:
                e = dd / (2 * a + 2 * dd + 1)
                return RateFormula("wavelet-stretched", "power", e, 0.0,
                                   descriptor=f"n^(-{e:.6g})")
            raise ConfigurationError("stretched radius law covers delta <= gamma + 1/nu only")
        if H.kind == "double_exponential":
            if d > gamma:
                raise ConfigurationError("double-exponential radius law covers delta <= gamma only")
            eta = (2 * a + 1) * max(a + d, 1 / H.nu) / (2 * a + 2 * d + 1)
            e = d / (2 * a + 2 * d + 1)
            return RateFormula("wavelet-double-exponential", "power", e, eta,
                               descriptor=f"n^(-{e:.6g}) (log n)^{eta:.6g}")
        raise ConfigurationError("point-mass radius laws have no associated rate; candidates: stretched, double_exponential")

    raise ConfigurationError(f"unsupported prior {type(prior).__name__}")


def resolution_level(scenario: RateScenario, n: float, a: float | None = None) -> int:
    """Test resolution ``k_n``.

    Mild: ``ceil(n eps_n^2)`` with ``eps_n = n^(-(alpha+s)/(2 alpha+2 s+1))``,
    i.e. ``ceil(n^(1/(2 alpha + 2 s + 1)))`` where ``s`` is the smoothness
    driving the rate. Severe: ``ceil((a log n)^(1/beta))`` with
    ``a = 1/(4 c0)`` by default so that ``c0 a < 1/2``.
    """
    op = scenario.build_operator()
    cl = _classification(op)
    if cl.variant == "severe":
        a = 1.0 / (4.0 * cl.c0) if a is None else a
        if not cl.c0 * a < 0.5:
            raise ConfigurationError("severe resolution needs c0 * a < 1/2")
        return max(1, math.ceil((a * math.log(n)) ** (1.0 / cl.beta)))
    theoretical_rate(scenario)  # validates the combination
    prior = scenario.build_prior()
    if isinstance(prior, GaussianPriorSpec):
        s = prior.delta
    elif isinstance(prior, WaveletPriorSpec) and prior.H.kind == "stretched":
        s = min(prior.delta - 1.0 / prior.H.nu, _truth_gamma(scenario.truth))
    elif isinstance(prior, WaveletPriorSpec):
        s = prior.delta
    else:
        s = _truth_gamma(scenario.truth)
    if math.isinf(s):
        return max(1, math.ceil(math.log(n)))
    return max(1, math.ceil(n ** (1.0 / (2 * cl.alpha + 2 * s + 1))))


# ---------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class RateRow:
    n: float
    replicate: int
    radius: float
    mass_outside: float
    runtime: float
    flagged: bool = False
    note: str = ""


@dataclass
class RateTable:
    rows: list
    scenario: RateScenario | None = None

    COLUMNS = ("n", "replicate", "contraction_radius", "posterior_mass_outside", "runtime", "flagged", "note")

    def validate(self) -> None:
        if any(not r.radius >= 0 for r in self.rows):
            raise ConfigurationError("contraction radii must be nonnegative")
        if self.scenario is not None:
            want = {(n, i) for n in self.scenario.n_grid for i in range(self.scenario.replicates)}
            have = {(r.n, r.replicate) for r in self.rows}
            if want != have or len(self.rows) != len(want):
                raise ConfigurationError("rate table does not cover the scenario grid exactly once")

    @property
    def n_values(self) -> np.ndarray:
        return np.unique([r.n for r in self.rows])

    def radii(self, n: float) -> np.ndarray:
        return np.array([r.radius for r in self.rows if r.n == n])

    def median_radii(self) -> tuple[np.ndarray, np.ndarray]:
        ns = self.n_values
        return ns, np.array([np.median(self.radii(n)) for n in ns])

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for r in self.rows:
                w.writerow([repr(r.n), r.replicate, repr(r.radius), repr(r.mass_outside), f"{r.runtime:.6f}",
                            int(r.flagged), r.note])
        return path

    @classmethod
    def from_csv(cls, path) -> "RateTable":
        with Path(path).open() as fh:
            rd = csv.DictReader(fh)
            rows = [RateRow(float(d["n"]), int(d["replicate"]), float(d["contraction_radius"]),
                            float(d["posterior_mass_outside"]), float(d["runtime"]),
                            bool(int(d["flagged"])), d.get("note", "")) for d in rd]
        return cls(rows)


def _posterior(scenario: RateScenario, prior, obs, seed):
    if isinstance(prior, GaussianPriorSpec):
        return conjugate_posterior(prior, obs)
    if isinstance(prior, SievePriorSpec):
        return rjmcmc_sieve_posterior(prior, obs, scenario.mcmc_config(), seed)
    if isinstance(prior, WaveletPriorSpec):
        return wavelet_posterior_mcmc(prior, obs, scenario.mcmc_config(), seed, J_max=scenario.J_max)
    raise ConfigurationError(f"unsupported prior {type(prior).__name__}")


def _xi(scenario: RateScenario, n: float) -> float:
    try:
        return float(theoretical_rate(scenario).xi(n))
    except ConfigurationError:
        return math.nan


def run_cell(scenario: RateScenario, n_idx: int, rep: int) -> RateRow:
    """One ``(n, replicate)`` cell; its randomness depends only on the cell address."""
    t0 = time.perf_counter()
    n = scenario.n_grid[n_idx]
    op = scenario.build_operator()
    prior = scenario.build_prior()
    f0 = scenario.build_truth(op.K_max)
    s_obs, s_post, s_draw = stream(scenario.seed, n_idx, rep).spawn(3)
    obs = simulate_observation(f0, op, n, s_obs)
    flagged, note = False, ""
    post = _posterior(scenario, prior, obs, s_post)
    warn = getattr(post, "metadata", {}).get("tuning_warning")
    if warn:
        flagged, note = True, "; ".join(warn)
    try:
        radius = contraction_radius(post, f0, scenario.tau, draws=scenario.draws, seed=s_draw)
    except SamplingError as exc:
        radius, flagged, note = math.nan, True, str(exc)
    xi = _xi(scenario, n)
    mass = posterior_mass_outside(post, f0, scenario.M * xi, draws=scenario.draws, seed=s_draw).estimate \
        if np.isfinite(xi) else math.nan
    return RateRow(n, rep, radius, mass, time.perf_counter() - t0, flagged, note)


def _cell(args):
    return run_cell(*args)


def run_experiment(scenario: RateScenario, workers: int | None = None) -> RateTable:
    """Run every grid cell; ``workers > 1`` uses a process pool.

    Output is identical for any ``workers`` since each cell owns the seed
    stream ``(seed, n_index, replicate)`` and rows are sorted afterwards.
    """
    tasks = [(scenario, i, r) for i in range(len(scenario.n_grid)) for r in range(scenario.replicates)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_cell, tasks))
    else:
        rows = [_cell(t) for t in tasks]
    rows.sort(key=lambda r: (r.n, r.replicate))
    table = RateTable(rows, scenario)
    nan_rows = [r for r in rows if not np.isfinite(r.radius)]
    if nan_rows:
        warnings.warn(f"{len(nan_rows)} cells produced no radius and are flagged")
    return table


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class RateFit:
    model: str
    slope: float
    intercept: float
    slope_std_error: float
    theoretical_exponent: float | None
    verdict: bool | None
    tolerance: float
    n_points: int
    corrected_slope: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def fit_arrays(n, r, model: str = "power", theoretical: float | None = None, tolerance: float = 0.05,
               log_exponent: float = 0.0) -> RateFit:
    """OLS of ``log r`` on ``log n`` (power) or ``log log n`` (logarithmic).

    ``theoretical`` is the target slope (negative for decaying rates). When
    ``log_exponent`` is nonzero a second, log-corrected slope of
    ``log r - log_exponent * log log n`` on ``log n`` is reported.
    """
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    if model not in ("power", "logarithmic"):
        raise ConfigurationError(f"unknown rate model {model!r}")
    keep = np.isfinite(r) & (r > 0)
    if not keep.all():
        warnings.warn(f"excluding {int((~keep).sum())} nonpositive or missing radii from the fit")
    n, r = n[keep], r[keep]
    if n.size < 3:
        raise ConfigurationError("rate fits need at least 3 grid points with positive radii")
    if model == "logarithmic" and np.any(n <= math.e):
        raise ConfigurationError("logarithmic model needs n > e")
    x = np.log(n) if model == "power" else np.log(np.log(n))
    y = np.log(r)
    res = stats.linregress(x, y)
    # an exact fit has zero residual; report the rounding floor instead of 0
    se = max(float(res.stderr), np.finfo(float).eps * max(1.0, abs(res.slope)))
    corrected = None
    if log_exponent and model == "power":
        corrected = float(stats.linregress(x, y - log_exponent * np.log(np.log(n))).slope)
    verdict = None if theoretical is None else bool(abs(res.slope - theoretical) <= tolerance)
    return RateFit(model, float(res.slope), float(res.intercept), se, theoretical, verdict, tolerance, int(n.size),
                   corrected)


def fit_rate(table: RateTable, model: str | None = None, tolerance: float | None = None,
             theoretical: float | None = None) -> RateFit:
    """Fit the median radius across replicates against the rate model.

    With a scenario attached, the model, target slope and tolerance default
    to :func:`theoretical_rate` and the scenario's ``tolerance``.
    """
    ns, med = table.median_radii()
    log_exp = 0.0
    sc = table.scenario
    if sc is not None:
        try:
            rate = theoretical_rate(sc)
        except ConfigurationError:
            rate = None
        if rate is not None:
            model = model or rate.model
            if theoretical is None and model == rate.model:
                theoretical = rate.slope
            log_exp = rate.log_exponent
        tolerance = sc.tolerance if tolerance is None else tolerance
    return fit_arrays(ns, med, model or "power", theoretical, 0.05 if tolerance is None else tolerance, log_exp)


def experiment_metadata(scenario: RateScenario, wall_clock: float) -> dict:
    import platform

    import scipy

    from . import __version__

    return {
        "scenario_hash": spec_hash(scenario.to_dict()),
        "prior_hash": spec_hash(scenario.prior),
        "operator_hash": spec_hash(scenario.operator),
        "versions": {"contract_bench": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_clock_seconds": wall_clock,
        "scenario": scenario.to_dict(),
    }


# ---------------------------------------------------------------------------
# test error curves


@dataclass(frozen=True)
class PowerRow:
    n: float
    k_n: int
    xi_n: float
    separation: float
    type_I_hat: float
    type_II_hat: float
    borell_bound: float


def power_curve(scenario: RateScenario, level: float = 0.05, pilot_replicates: int = 4000,
                replicates: int = 10_000, separation_factor: float = 1.0) -> tuple[float, list]:
    """Type-I and type-II errors of the plug-in test along the ``n`` grid.

    A single ``M0`` is calibrated on pilot runs: the largest ratio, over the
    grid, of the ``1 - level/2`` quantile of ``||f_n - f0||`` under ``f0`` to
    ``xi_n``. The alternative at each ``n`` is ``f0 + M xi_n e_1`` with
    ``M = separation_factor * M0``. ``borell_bound`` is the Borell bound on
    the type-I error once the bias ``||P_{k_n} f0 - f0||`` and the mean
    noise bound are subtracted from the threshold (1 when nothing is left).
    """
    from .frequentist_tests import borell_tail_bound, calibrate_threshold, estimate_test_errors
    from .spectral_core import BasisMap

    op = scenario.build_operator()
    f0 = scenario.build_truth(op.K_max)
    bm = BasisMap.identity(op.K_max)
    rate = theoretical_rate(scenario)
    cells = []
    for i, n in enumerate(scenario.n_grid):
        cells.append((n, resolution_level(scenario, n), float(rate.xi(n))))
    M0 = max(calibrate_threshold(op, bm, f0, n, k, xi, level=level / 2, replicates=pilot_replicates,
                                 seed=stream(scenario.seed, i, 0))
             for i, (n, k, xi) in enumerate(cells))
    rows = []
    for i, (n, k, xi) in enumerate(cells):
        sep = separation_factor * M0 * xi
        alt = f0.coeffs.copy()
        alt[0] += sep
        te = estimate_test_errors(op, bm, f0, [SequenceVector(alt)], n, k, M0, xi, replicates,
                                  stream(scenario.seed, i, 1))
        bias = float(np.linalg.norm(f0.coeffs[k:]))
        mean_bound = borell_tail_bound(bm, op, k, n, 1.0).mean_bound
        x = M0 * xi - bias - mean_bound
        bb = borell_tail_bound(bm, op, k, n, x).probability if x > 0 else 1.0
        rows.append(PowerRow(n, k, xi, sep, te.type_I, te.type_II[0], bb))
    return M0, rows
