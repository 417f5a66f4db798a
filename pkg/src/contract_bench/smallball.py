"""Prior mass near the truth: small-ball probabilities, concentration
functions of diagonal Gaussian priors, and covering numbers of the RKHS
unit ball for exponentially decaying spectra.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special, stats

from ._seeding import SeedLike, as_generator, block_streams
from .errors import ConfigurationError, NumericalError
from .priors import GaussianPriorSpec, SievePriorSpec, WaveletPriorSpec
from .spectral_core import SequenceVector, SpectralOperator
from .wavelets import meyer_matrix, required_K

# ---------------------------------------------------------------------------
# exact law of weighted chi-square sums


def _talbot_log_cdf_fixed(log_transform, x: float, nodes: int) -> float:
    M = nodes
    r = 2.0 * M / (5.0 * x)
    th = np.arange(1, M) * np.pi / M
    cot = 1.0 / np.tan(th)
    sv = np.concatenate([[r + 0j], r * th * (cot + 1j)])
    g = np.concatenate([[0.5 + 0j], 1.0 + 1j * th * (1.0 + cot**2) - 1j * cot])
    with np.errstate(over="ignore", invalid="ignore"):
        z = x * sv + log_transform(sv) - np.log(sv)
        zmax = float(np.max(z.real))
        val = float(np.sum((np.exp(z - zmax) * g).real)) * r / M
    if not (np.isfinite(zmax) and val > 0):
        return -np.inf
    out = zmax + math.log(val)
    # a probability above one means the contour sum has lost all accuracy
    return out if out <= 1e-9 else np.nan


TALBOT_MAX_NODES = 1536
TALBOT_RTOL = 1e-8


def _talbot_log_cdf(log_transform, x: float, nodes: int) -> float:
    """``log P(Q <= x)`` from ``log E exp(-s Q)`` by fixed-Talbot inversion.

    Inverts ``E exp(-s Q) / s``; the terms are rescaled by their largest
    modulus so that probabilities far below the double range survive.
    Deep lower tails need more contour nodes, while too many overflow, so
    the node count is doubled from ``nodes`` until two successive values
    agree to ``TALBOT_RTOL``.
    """
    prev = _talbot_log_cdf_fixed(log_transform, x, nodes)
    M = nodes
    while M < TALBOT_MAX_NODES:
        M *= 2
        cur = _talbot_log_cdf_fixed(log_transform, x, M)
        if np.isfinite(prev) and np.isfinite(cur) and abs(cur - prev) <= TALBOT_RTOL * max(1.0, abs(cur)):
            return min(cur, 0.0)
        prev = cur
    raise NumericalError(f"Talbot inversion at x={x:.6g} did not converge with up to {M} nodes")


def weighted_chisq_cdf(weights, x: float, nodes: int = 24, log: bool = False) -> float:
    """``P(sum_k w_k zeta_k^2 <= x)`` for i.i.d. standard normal ``zeta``.

    Numerical inversion of the Laplace transform
    ``prod_k (1 + 2 w_k s)^(-1/2) / s`` along a Talbot contour. The
    relative accuracy stays near 1e-8 well into the lower tail, which the
    oscillatory Gil-Pelaez integral cannot deliver; tails beyond the reach
    of double precision raise :class:`NumericalError`.
    """
    lam = np.asarray(weights, dtype=float)
    if np.any(lam < 0):
        raise ConfigurationError("weights must be nonnegative")
    if x <= 0:
        return -np.inf if log else 0.0
    lp = _talbot_log_cdf(lambda sv: -0.5 * np.sum(np.log1p(2.0 * lam[None, :] * sv[:, None]), axis=1), x, nodes)
    return lp if log else math.exp(lp)


def noncentral_weighted_chisq_cdf(weights, shifts, x: float, nodes: int = 24, log: bool = False) -> float:
    """``P(sum_k w_k (zeta_k + mu_k)^2 <= x)`` by the same Talbot inversion.

    The transform is ``prod_k (1 + 2 w_k s)^(-1/2) exp(-s w_k mu_k^2 / (1 + 2 w_k s))``.
    """
    lam = np.asarray(weights, dtype=float)
    mu2 = np.asarray(shifts, dtype=float) ** 2
    if np.any(lam < 0):
        raise ConfigurationError("weights must be nonnegative")
    if x <= 0:
        return -np.inf if log else 0.0

    def log_transform(sv):
        d = 1.0 + 2.0 * lam[None, :] * sv[:, None]
        return -0.5 * np.sum(np.log(d), axis=1) - sv * np.sum(lam * mu2 / d, axis=1)

    lp = _talbot_log_cdf(log_transform, x, nodes)
    return lp if log else math.exp(lp)


# ---------------------------------------------------------------------------
# analytic centred small-ball bound


EPS_CAP = 1.0  # the polynomial prefactor outgrows any probability for eps > 1 when w < 3
# below this the fixed-Talbot inversion loses the deep lower tail that sets B
W_MIN_CERTIFIED = 0.75


def _shape_log(w: float, eps) -> np.ndarray:
    rho = 1.0 / (2.0 * w - 1.0)
    eps = np.asarray(eps, dtype=float)
    return rho * (3.0 - w) * np.log(eps) - w * (1.0 + rho) ** rho * eps ** (-2.0 * rho)


def centered_smallball_probability(w: float, eps: float, K: int = 20_000, nodes: int = 24,
                                   log: bool = False) -> float:
    """``P(sum_{k>=1} (1+k^2)^(-w) zeta_k^2 < eps^2)`` for the full infinite sum.

    The first ``K`` weights enter the transform exactly; for the rest
    ``log(1 + 2 l s)`` is expanded to second order (``|l s|`` is tiny there)
    with the power sums taken from the integral of ``x^(-2w)``.
    """
    if not w > 0.5:
        raise ConfigurationError("w must exceed 1/2")
    lam = (1.0 + np.arange(1, K + 1, dtype=float) ** 2) ** (-w)
    a = K + 0.5
    S1 = a ** (1.0 - 2.0 * w) / (2.0 * w - 1.0)
    S2 = a ** (1.0 - 4.0 * w) / (4.0 * w - 1.0)

    def log_transform(sv):
        return -0.5 * np.sum(np.log1p(2.0 * lam[None, :] * sv[:, None]), axis=1) - (sv * S1 - sv**2 * S2)

    lp = _talbot_log_cdf(log_transform, eps * eps, nodes)
    return lp if log else math.exp(lp)


@lru_cache(maxsize=128)
def certified_constant(w: float) -> float:
    """Constant ``B(w)`` making the analytic bound valid on ``0 < eps <= 1``.

    The ratio of the true probability to the analytic shape decreases in
    ``eps`` (checked on the grid below), so its infimum over ``(0, 1]`` is
    attained near ``eps = 1``. We take 0.9 times the grid minimum.
    """
    if w < W_MIN_CERTIFIED:
        raise ConfigurationError(f"the analytic bound is certified only for w >= {W_MIN_CERTIFIED}")
    grid = np.linspace(0.25, EPS_CAP, 7)
    ratios = np.full(grid.size, np.nan)
    for i, e in enumerate(grid):
        # deep-tail points may be out of reach of double precision
        try:
            ratios[i] = centered_smallball_probability(w, float(e), log=True) - float(_shape_log(w, e))
        except NumericalError:
            pass
    # the minimum sits at the top of the range, which must be resolved
    ok = np.isfinite(ratios)
    if not ok[-3:].all():
        raise NumericalError(f"cannot certify the small-ball constant for w={w}")
    return 0.9 * math.exp(float(np.min(ratios[ok])))


def centered_smallball_lower_bound(w: float, eps, B: float | None = None, log: bool = False):
    """``B eps^(rho(3-w)) exp(-w (1+rho)^rho eps^(-2 rho))`` with ``rho = 1/(2w-1)``.

    Lower-bounds ``P(sum_k (1+k^2)^(-w) zeta_k^2 < eps^2)``. With the
    default certified ``B`` the bound holds on ``(0, 1]``; larger ``eps``
    is evaluated at 1, which keeps the result valid and nondecreasing.
    """
    if not w > 0.5:
        raise ConfigurationError("w must exceed 1/2")
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0):
        raise ConfigurationError("eps must be positive")
    B = certified_constant(float(w)) if B is None else B
    out = math.log(B) + _shape_log(w, np.minimum(e, EPS_CAP))
    if not log:
        out = np.exp(out)
    return float(out) if np.ndim(out) == 0 else out


def _log_prob_abs_normal_below(log_a: np.ndarray) -> np.ndarray:
    """``log P(|zeta| < a)`` given ``log a``, accurate for tiny and huge ``a``."""
    out = np.zeros_like(log_a)
    small = log_a < math.log(1e-8)
    out[small] = math.log(math.sqrt(2.0 / math.pi)) + log_a[small]
    mid = ~small & (log_a < math.log(40.0))
    out[mid] = np.log(special.erf(np.exp(log_a[mid]) / math.sqrt(2.0)))
    return out


def product_smallball_lower_bound(log_s, log_eps: float) -> tuple[float, int]:
    """Elementary lower bound on ``log P(sum_k s_k zeta_k^2 < eps^2)`` from ``log s``.

    For a cut ``J``: the first ``J`` terms each below ``eps^2 / (2J)`` and
    the remainder below ``eps^2 / 2`` (Markov). Returns ``(log_bound, J)``
    maximized over ``J``.
    """
    log_s = np.asarray(log_s, dtype=float)
    K = log_s.size
    best, bestJ = -np.inf, 0
    for J in range(0, K + 1):
        tail_ratio = 2.0 * math.exp(min(special.logsumexp(log_s[J:]) - 2.0 * log_eps, 700.0)) if J < K else 0.0
        if tail_ratio >= 1.0:
            continue
        lp = math.log1p(-tail_ratio)
        if J:
            log_a = log_eps - 0.5 * math.log(2.0 * J) - 0.5 * log_s[:J]
            lp += float(np.sum(_log_prob_abs_normal_below(log_a)))
        if lp > best:
            best, bestJ = lp, J
    return best, bestJ


# ---------------------------------------------------------------------------
# Monte Carlo small-ball probabilities


@dataclass(frozen=True)
class SmallBallEstimate:
    estimate: float
    std_error: float
    hits: int
    draws: int
    upper_bound: float | None = None  # one-sided 95% Clopper-Pearson bound when hits == 0
    sobolev_estimate: float | None = None  # ball in H^{-alpha} for mild operators


def _prior_block(prior, rng, K, size):
    if isinstance(prior, GaussianPriorSpec):
        return prior.sample_batch(rng, K, size)
    if isinstance(prior, SievePriorSpec):
        return prior.sample_batch(rng, K, size)[0]
    if isinstance(prior, WaveletPriorSpec):
        J = _wavelet_level_for(K)
        beta, _ = prior.sample_batch(rng, J, size)
        return beta @ meyer_matrix(J, K)
    raise ConfigurationError(f"unsupported prior {type(prior).__name__}")


def _wavelet_level_for(K: int) -> int:
    J = 0
    while required_K(J + 1) <= K:
        J += 1
    if required_K(J) > K:
        raise ConfigurationError(f"K_max={K} cannot hold any wavelet level")
    return J


def smallball_mc(prior, op: SpectralOperator, f0: SequenceVector, eps: float, N: int, seed: SeedLike,
                 block: int = 10_000) -> SmallBallEstimate:
    """Fraction of prior draws with ``||A f - A f0|| <= eps``."""
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    if N < 1000:
        raise ConfigurationError("use at least 1000 draws")
    K = op.K_max
    if f0.K_max != K:
        raise ConfigurationError("truth and operator truncations differ")
    mild = op.classification.variant == "mild"
    if mild:
        k = np.arange(1, K + 1, dtype=float)
        wts = (1.0 + k**2) ** (-op.classification.alpha / 2)
    hits = hits_h = 0
    nblocks = -(-N // block)
    for b, ss in enumerate(block_streams(seed, nblocks)):
        rng = np.random.default_rng(ss)
        m = min(block, N - b * block)
        diff = _prior_block(prior, rng, K, m) - f0.coeffs
        hits += int(np.sum(np.linalg.norm(diff * op.rho, axis=1) <= eps))
        if mild:
            hits_h += int(np.sum(np.linalg.norm(diff * wts, axis=1) <= eps))
    p = hits / N
    ub = None if hits else float(stats.beta.ppf(0.95, 1, N))
    return SmallBallEstimate(p, math.sqrt(p * (1 - p) / N), hits, N, ub, hits_h / N if mild else None)


@dataclass(frozen=True)
class TiltedSmallBall:
    """Importance-sampling estimate of a Gaussian small-ball probability."""

    log_estimate: float
    relative_error: float  # standard error of the estimate divided by the estimate
    draws: int
    theta: float

    @property
    def estimate(self) -> float:
        return math.exp(self.log_estimate)


def _tilt_moments(lam, mu2, theta):
    d = 1.0 + 2.0 * theta * lam
    log_mgf = float(np.sum(-0.5 * np.log(d) - theta * lam * mu2 / d))
    mean_q = float(np.sum(lam / d + lam * mu2 / d**2))
    return log_mgf, mean_q


def smallball_tilted(prior: GaussianPriorSpec, op: SpectralOperator, f0: SequenceVector, eps: float, N: int,
                     seed: SeedLike, block: int = 20_000) -> TiltedSmallBall:
    """``P(||A f - A f0|| <= eps)`` under a Gaussian prior by exponential tilting.

    With ``f_k = tau_k zeta_k`` the squared distance is
    ``Q = sum_k w_k (zeta_k + mu_k)^2``, ``w_k = rho_k^2 tau_k^2`` and
    ``mu_k = -f0_k / tau_k``. Draws come from the law tilted by
    ``exp(-theta Q)``, which is again a product of Gaussians, with
    ``theta`` chosen so that the tilted mean of ``Q`` is ``eps^2``. The
    weights ``E[exp(-theta Q)] exp(theta Q)`` are bounded on the event,
    so the relative error stays controlled however small the probability.
    """
    if not isinstance(prior, GaussianPriorSpec):
        raise ConfigurationError("tilted small-ball estimates need a Gaussian prior")
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    K = op.K_max
    if f0.K_max != K:
        raise ConfigurationError("truth and operator truncations differ")
    tau = prior.tau_values(K)
    lam = (op.rho * tau) ** 2
    mu = -f0.coeffs / tau
    mu2 = mu**2
    x = eps * eps
    theta = 0.0
    if _tilt_moments(lam, mu2, 0.0)[1] > x:
        hi = 1.0
        while _tilt_moments(lam, mu2, hi)[1] > x:
            hi *= 4.0
            if hi > 1e300:
                raise NumericalError("tilt parameter diverged")
        lo = hi / 4.0 if hi > 1.0 else 0.0
        from scipy.optimize import brentq

        theta = brentq(lambda t: _tilt_moments(lam, mu2, t)[1] - x, lo, hi, xtol=1e-14 * hi, rtol=1e-12)
    log_mgf, _ = _tilt_moments(lam, mu2, theta)
    d = 1.0 + 2.0 * theta * lam
    sd = 1.0 / np.sqrt(d)
    mean = -2.0 * theta * lam * mu / d
    logw = []
    nblocks = -(-N // block)
    for b, ss in enumerate(block_streams(seed, nblocks)):
        rng = np.random.default_rng(ss)
        m = min(block, N - b * block)
        Z = mean + sd * rng.standard_normal((m, K))
        Q = np.sum(lam * (Z + mu) ** 2, axis=1)
        logw.append(np.where(Q <= x, theta * Q, -np.inf))
    logw = np.concatenate(logw) + log_mgf
    if not np.isfinite(logw).any():
        return TiltedSmallBall(-np.inf, math.inf, N, theta)
    log_mean = float(special.logsumexp(logw)) - math.log(N)
    rel = np.exp(logw - log_mean)
    rel_se = float(np.std(rel) / math.sqrt(N))
    return TiltedSmallBall(log_mean, rel_se, N, theta)


# ---------------------------------------------------------------------------
# concentration function


@dataclass(frozen=True, eq=False)
class ConcentrationResult:
    eps: float
    approx_term: float
    centered_term: float
    total: float
    minimizer: SequenceVector
    log_nu: float | None = None
    centered_method: str = "bound"
    unresolved: bool = False
    details: dict = field(default_factory=dict)

    @property
    def nu(self) -> float | None:
        return None if self.log_nu is None else math.exp(min(self.log_nu, 700.0))


def _log1p_t(log_t: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, log_t)


def _solve_log_nu(log_b2: np.ndarray, log_s: np.ndarray, log_eps2: float, rtol: float = 1e-12) -> float:
    """Root of ``sum b_k^2 / (1 + nu s_k)^2 = eps^2`` by bisection in ``log nu``.

    The constraint is strictly decreasing in ``nu``; the bracket is grown
    geometrically until it straddles the root.
    """
    def resid(lognu):
        return float(special.logsumexp(log_b2 - 2.0 * _log1p_t(lognu + log_s))) - log_eps2

    lo, hi = -1.0, 1.0
    while resid(lo) < 0:
        lo -= 2.0 * abs(lo)
        if lo < -1e5:
            raise NumericalError(f"no lower bracket for nu (reached log nu = {lo})")
    while resid(hi) > 0:
        hi += 2.0 * abs(hi)
        if hi > 1e5:
            raise NumericalError(f"no upper bracket for nu: log residual {resid(hi):.3g} at log nu = {hi}")
    for _ in range(600):
        mid = 0.5 * (lo + hi)
        r = resid(mid)
        # r is a log ratio, so |r| <= rtol is a relative tolerance on the constraint
        if abs(r) <= rtol:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    mid = 0.5 * (lo + hi)
    if abs(resid(mid)) > 1e-8:
        raise NumericalError(f"bisection stalled in log nu in [{lo}, {hi}] with log residual {resid(mid):.3g}")
    return mid


def approximation_term(s, b, eps: float, log_s=None) -> tuple[float, np.ndarray, float | None]:
    """``min sum h_k^2 / s_k`` subject to ``||h - b|| <= eps``.

    Returns ``(value, h, log_nu)``; the minimizer is
    ``h_k = b_k nu s_k / (1 + nu s_k)``. Pass ``log_s`` when ``s``
    underflows.
    """
    b = np.asarray(b, dtype=float)
    if log_s is None:
        with np.errstate(divide="ignore"):
            log_s = np.log(np.asarray(s, dtype=float))
    if np.linalg.norm(b) <= eps:
        return 0.0, np.zeros_like(b), None
    with np.errstate(divide="ignore"):
        log_b2 = 2.0 * np.log(np.abs(b))
    lognu = _solve_log_nu(log_b2, log_s, 2.0 * math.log(eps))
    log_t = lognu + log_s
    h = b * np.exp(log_t - _log1p_t(log_t))
    # sum h^2 / s = sum b^2 nu t / (1 + t)^2, kept in logs to avoid dividing by tiny s
    value = float(np.exp(special.logsumexp(log_b2 + lognu + log_t - 2.0 * _log1p_t(log_t))))
    return value, h, lognu


def concentration_function(spec: GaussianPriorSpec, op: SpectralOperator, b, eps: float,
                           centered_mode: str = "bound", draws: int = 100_000,
                           seed: SeedLike = 0) -> ConcentrationResult:
    """Concentration function of ``A f`` at ``b`` (coordinates of ``A f0``).

    ``centered_mode="bound"`` uses the analytic small-ball bound for mildly
    ill-posed operators and the product bound otherwise; ``"mc"`` estimates
    the centred probability from ``draws`` prior draws and falls back to the
    bound (flagged ``unresolved``) when no draw lands in the ball.
    """
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    b = np.asarray(b.coeffs if isinstance(b, SequenceVector) else b, dtype=float)
    K = op.K_max
    log_s = 2.0 * np.log(spec.tau_values(K)) + 2.0 * np.log(np.abs(op.rho))
    approx, h, lognu = approximation_term(None, b, eps, log_s=log_s)

    bound_log, method = _centered_bound(spec, op, log_s, eps)
    details = {"bound_log_prob": bound_log}
    unresolved = False
    if centered_mode == "bound":
        centered = -bound_log
    elif centered_mode == "mc":
        s = np.exp(log_s)
        rng = as_generator(seed)
        hits = 0
        for start in range(0, draws, 10_000):
            m = min(10_000, draws - start)
            z = rng.standard_normal((m, K))
            hits += int(np.sum((z * z) @ s < eps**2))
        details["mc_hits"] = hits
        if hits == 0:
            unresolved = True
            centered = -bound_log
        else:
            centered = -math.log(hits / draws)
            method = "mc"
    else:
        raise ConfigurationError("centered_mode must be 'mc' or 'bound'")
    return ConcentrationResult(float(eps), approx, centered, approx + centered, SequenceVector(h), lognu,
                               method, unresolved, details)


def _centered_bound(spec: GaussianPriorSpec, op: SpectralOperator, log_s: np.ndarray, eps: float) -> tuple[float, str]:
    cls = op.classification
    if cls.variant == "mild":
        _, C2 = op.envelope_constants()
        w = cls.alpha + spec.delta + 0.5
        return centered_smallball_lower_bound(w, eps / C2, log=True), "analytic"
    lp, _ = product_smallball_lower_bound(log_s, math.log(eps))
    return lp, "product"


# ---------------------------------------------------------------------------
# covering numbers


@dataclass(frozen=True)
class RectangleCover:
    """Lattice cover of ``prod_k [-a_k, a_k]`` with ``a_k = C exp(-c0 k^beta)``.

    ``J`` coordinates are kept; the lattice spacing ``eps / (2 sqrt(J))``
    puts every point of the kept box within ``eps / 4`` of a lattice point,
    and the discarded coordinates contribute at most ``tail_radius``.
    """

    eps: float
    J: int
    spacing: float
    half_widths: np.ndarray
    counts: np.ndarray
    log_count: float
    tail_radius: float

    def centers(self, k: int) -> np.ndarray:
        a, m = self.half_widths[k], int(self.counts[k])
        return -a + self.spacing * (np.arange(m) + 0.5)

    def enumerate(self, limit: int = 2_000_000) -> np.ndarray:
        """All lattice points (only for small ``J``)."""
        total = int(np.prod(self.counts)) if self.J else 1
        if total > limit:
            raise ConfigurationError(f"{total} lattice points exceed the enumeration limit")
        if self.J == 0:
            return np.zeros((1, 0))
        return np.array(list(itertools.product(*[self.centers(k) for k in range(self.J)])))


def rectangle_cover(C: float, c0: float, beta: float, eps: float, k_limit: int = 100_000) -> RectangleCover:
    if not (C > 0 and c0 > 0 and beta > 0 and eps > 0):
        raise ConfigurationError("C, c0, beta and eps must be positive")

    def a(k):
        return C * np.exp(-c0 * np.asarray(k, dtype=float) ** beta)

    # smallest J with a_k < eps/4 for every k > J (a_k decreases)
    J = 0
    while a(J + 1) >= eps / 4:
        J += 1
        if J > k_limit:
            raise NumericalError("truncation level diverged")
    # and with the discarded l2 tail inside eps/2
    kk = np.arange(J + 1, J + 2000)
    while math.sqrt(float(np.sum(a(kk) ** 2))) > eps / 2:
        J += 1
        kk = kk + 1
    tail = math.sqrt(float(np.sum(a(np.arange(J + 1, J + 2000)) ** 2)))
    if J == 0:
        return RectangleCover(eps, 0, math.inf, np.zeros(0), np.zeros(0, dtype=int), 0.0, tail)
    hw = a(np.arange(1, J + 1))
    sp = eps / (2.0 * math.sqrt(J))
    counts = np.maximum(1, np.ceil(2.0 * hw / sp)).astype(np.int64)
    return RectangleCover(eps, J, sp, hw, counts, float(np.sum(np.log(counts))), tail)


def rkhs_cover_count(op: SpectralOperator, spec: GaussianPriorSpec, eps: float) -> float:
    """Log size of the lattice cover of the unit ball of the RKHS of ``A f``.

    Points ``b`` of the unit ball satisfy ``|b_k| <= tau_k |rho_k|``, which is
    bounded by ``C exp(-c0 k^beta)`` with ``C`` the largest observed ratio.
    """
    cls = op.classification
    if cls.variant != "severe":
        raise ConfigurationError("cover counts need a severely ill-posed operator")
    if not 0 < eps < 1:
        raise ConfigurationError("eps must lie in (0, 1)")
    k = np.arange(1, op.K_max + 1, dtype=float)
    env = spec.tau_values(op.K_max) * np.abs(op.rho)
    C = float(np.max(env * np.exp(cls.c0 * k**cls.beta)))
    return rectangle_cover(C, cls.c0, cls.beta, eps).log_count


def entropy_constant(c0: float, beta: float) -> float:
    """Leading constant of ``log N ~ const (log 1/eps)^(1 + 1/beta)`` for the lattice cover."""
    return c0 ** (-1.0 / beta) * beta / (beta + 1.0)
