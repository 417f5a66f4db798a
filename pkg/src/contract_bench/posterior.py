"""Posterior computation in the sequence model.

The log-likelihood (relative to the zero function) is

    l(f) = n sum_k rho_k f_k y_k - (n/2) sum_k rho_k^2 f_k^2,

so the posterior has density ``exp(l(f))`` with respect to the prior.
Gaussian priors are conjugate; sieve priors use reversible-jump MCMC and
the uniform wavelet prior uses componentwise Metropolis.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._seeding import SeedLike, as_generator
from .errors import ConfigurationError, SamplingError
from .priors import GaussianPriorSpec, SievePriorSpec, WaveletPriorSpec, spec_hash
from .spectral_core import Observation, SequenceVector
from .wavelets import meyer_matrix, required_K

DEFAULT_CONJUGATE_DRAWS = 4000


def log_likelihood(f, obs: Observation):
    """Exponent of the likelihood ratio against ``f = 0``.

    ``f`` may be a SequenceVector or an array whose last axis holds the
    coefficients (batch evaluation).
    """
    c = f.coeffs if isinstance(f, SequenceVector) else np.asarray(f, dtype=float)
    if c.shape[-1] != obs.K_max:
        raise ConfigurationError("coefficient vector and observation truncations differ")
    rho = obs.operator.rho
    rc = rho * c
    out = obs.n * (rc @ obs.y) - 0.5 * obs.n * np.sum(rc * rc, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# conjugate case


@dataclass(frozen=True, eq=False)
class ConjugatePosterior:
    """Independent Gaussian coordinates ``N(mean_k, var_k)``."""

    mean: np.ndarray
    var: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def K_max(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.mean + np.sqrt(self.var) * rng.standard_normal((size, self.K_max))

    def distances(self, f0: SequenceVector, draws: int = DEFAULT_CONJUGATE_DRAWS, seed: SeedLike = 0,
                  block: int = 1000) -> np.ndarray:
        """``||f - f0||`` over exact posterior draws, generated in blocks to bound memory."""
        rng = as_generator(seed)
        out = np.empty(draws)
        for start in range(0, draws, block):
            m = min(block, draws - start)
            out[start:start + m] = _dist(self.sample(rng, m), f0.coeffs)
        return out


def conjugate_posterior(spec: GaussianPriorSpec, obs: Observation) -> ConjugatePosterior:
    """Closed-form posterior under ``f_k ~ N(0, tau_k^2)`` independently."""
    tau2 = spec.tau_values(obs.K_max) ** 2
    rho = obs.operator.rho
    denom = 1.0 + obs.n * rho**2 * tau2
    var = tau2 / denom
    mean = obs.n * rho * tau2 * obs.y / denom
    return ConjugatePosterior(mean, var, {"prior": spec.to_dict(), "spec_hash": spec_hash(spec.to_dict())})


# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class MCMCConfig:
    """Run settings shared by both samplers.

    ``step_sizes`` (optional) seeds the per-coordinate random-walk scales;
    they are adapted during burn-in towards ``target_accept`` and frozen
    afterwards. ``birth_death_prob`` is the chance that an iteration
    attempts a dimension move (split evenly between birth and death).
    """

    iters: int = 20_000
    burn_in: int = 5_000
    thin: int = 1
    step_sizes: tuple | None = None
    birth_death_prob: float = 0.5
    target_accept: float = 0.3
    adapt: bool = True

    def __post_init__(self):
        if not self.iters > self.burn_in >= 0:
            raise ConfigurationError("iters must exceed burn_in")
        if self.thin < 1:
            raise ConfigurationError("thin must be >= 1")
        if not 0.0 <= self.birth_death_prob <= 1.0:
            raise ConfigurationError("birth_death_prob must lie in [0, 1]")

    @property
    def kept(self) -> int:
        return len(range(self.burn_in, self.iters, self.thin))

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["step_sizes"] = None if self.step_sizes is None else list(self.step_sizes)
        return d


@dataclass(frozen=True, eq=False)
class PosteriorChain:
    """Post-burn-in draws.

    ``kind == "sieve"``: ``samples`` holds spectral coefficients and ``dims``
    the truncation ``M``. ``kind == "wavelet"``: ``samples`` holds flat
    wavelet coefficients ``beta`` and ``dims`` the radius ``B``.
    """

    kind: str
    samples: np.ndarray
    dims: np.ndarray
    loglik: np.ndarray
    acceptance: dict
    burn_in: int
    thin: int
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.samples.shape[0]

    def fourier_samples(self, K_max: int | None = None) -> np.ndarray:
        if self.kind == "sieve":
            return self.samples
        J = int(round(math.log2(self.samples.shape[1]))) - 1
        K = required_K(J) if K_max is None else max(K_max, required_K(J))
        return self.samples @ meyer_matrix(J, K)

    def distances(self, f0: SequenceVector, **_) -> np.ndarray:
        if self.kind == "wavelet" and f0.basis_tag == "wavelet":
            return _dist(self.samples, f0.coeffs)
        return _dist(self.fourier_samples(f0.K_max), f0.coeffs)

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)


def _dist(F: np.ndarray, c0: np.ndarray) -> np.ndarray:
    """Row norms of ``F - c0`` with the shorter side zero-padded."""
    K = min(F.shape[1], c0.size)
    sq = np.sum((F[:, :K] - c0[:K]) ** 2, axis=1)
    sq += np.sum(F[:, K:] ** 2, axis=1) + float(np.sum(c0[K:] ** 2))
    return np.sqrt(sq)


def _adapt(log_step, acc_batch, target, it):
    return log_step + (acc_batch - target) / np.sqrt(1.0 + np.asarray(it) / 50.0)


def _tuning_warnings(acc: dict) -> list[str]:
    return [f"{k} acceptance {v:.3f} outside [0.05, 0.95]" for k, v in acc.items()
            if v is not None and not 0.05 <= v <= 0.95]


def rjmcmc_sieve_posterior(spec: SievePriorSpec, obs: Observation, cfg: MCMCConfig, seed: SeedLike) -> PosteriorChain:
    """Reversible-jump sampler for the sieve posterior on ``{(M, f_1..f_M)}``.

    Within a model every active coordinate takes a random-walk Metropolis
    step; given ``M`` the target factorizes over coordinates, so the
    coordinate updates are independent and can be applied together. Birth
    draws ``f_{M+1}`` from its prior marginal and death drops ``f_M``, so
    the acceptance ratio is the likelihood ratio times ``h(M')/h(M)``.
    """
    rng = as_generator(seed)
    K = obs.K_max
    n, y, rho = obs.n, obs.y, obs.operator.rho
    tau = spec.tau_values(K)
    pmf, tail = spec.h.table_for(K)
    with np.errstate(divide="ignore"):
        log_h = np.log(pmf)
    q = spec.q

    def coord_logpost(k_idx, x):
        # log prior density of f_k = tau_k xi plus its likelihood term
        return q.logpdf(x / tau[k_idx]) - np.log(tau[k_idx]) + n * (rho[k_idx] * x * y[k_idx] - 0.5 * (rho[k_idx] * x) ** 2)

    def coord_loglik(k_idx, x):
        return n * (rho[k_idx] * x * y[k_idx] - 0.5 * (rho[k_idx] * x) ** 2)

    # start from a shrinkage estimate at the largest coordinate clearly above the noise
    signal = np.flatnonzero(np.abs(y) * math.sqrt(max(n, 0.0)) > 2.0)
    M = int(signal.max()) + 1 if signal.size else 1
    supported = np.flatnonzero(np.isfinite(log_h)) + 1
    M = int(supported[np.argmin(np.abs(supported - M))])
    f = np.zeros(K)
    shrink = n * rho * tau**2 / (1.0 + n * rho**2 * tau**2)
    f[:M] = shrink[:M] * y[:M]

    if cfg.step_sizes is not None:
        steps = np.resize(np.asarray(cfg.step_sizes, dtype=float), K)
    else:
        with np.errstate(divide="ignore"):
            steps = np.minimum(tau, 1.0 / (math.sqrt(max(n, 1e-300)) * np.abs(rho)))
    log_step = np.log(steps)

    active = np.arange(K)
    lp = coord_logpost(active, f)
    kept = cfg.kept
    samples = np.zeros((kept, K))
    dims = np.zeros(kept, dtype=int)
    lls = np.zeros(kept)
    n_within = n_within_acc = 0
    n_birth = n_birth_acc = n_death = n_death_acc = 0
    win_tries = np.zeros(K)
    win_acc = np.zeros(K)
    p_dim = cfg.birth_death_prob
    out = 0

    for it in range(cfg.iters):
        u = rng.random()
        if u < p_dim:
            if rng.random() < 0.5:
                n_birth += 1
                if M < K and np.isfinite(log_h[M]):
                    x = tau[M] * q.sample(rng, 1)[0]
                    log_a = log_h[M] - log_h[M - 1] + coord_loglik(M, x)
                    if math.log(rng.random()) < log_a:
                        f[M] = x
                        lp[M] = coord_logpost(M, x)
                        M += 1
                        n_birth_acc += 1
            else:
                n_death += 1
                if M > 1 and np.isfinite(log_h[M - 2]):
                    log_a = log_h[M - 2] - log_h[M - 1] - coord_loglik(M - 1, f[M - 1])
                    if math.log(rng.random()) < log_a:
                        f[M - 1] = 0.0
                        M -= 1
                        n_death_acc += 1
        else:
            idx = active[:M]
            prop = f[:M] + np.exp(log_step[:M]) * rng.standard_normal(M)
            lp_new = coord_logpost(idx, prop)
            acc = np.log(rng.random(M)) < lp_new - lp[:M]
            f[:M] = np.where(acc, prop, f[:M])
            lp[:M] = np.where(acc, lp_new, lp[:M])
            n_within += M
            n_within_acc += int(acc.sum())
            win_tries[:M] += 1
            win_acc[:M] += acc
            if cfg.adapt and it < cfg.burn_in:
                log_step[:M] = _adapt(log_step[:M], acc.astype(float), cfg.target_accept, win_tries[:M])
        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            samples[out] = f
            dims[out] = M
            lls[out] = log_likelihood(f, obs)
            out += 1

    acceptance = {
        "within": n_within_acc / n_within if n_within else None,
        "birth": n_birth_acc / n_birth if n_birth else None,
        "death": n_death_acc / n_death if n_death else None,
    }
    meta = {
        "spec_hash": spec_hash(spec.to_dict()),
        "prior": spec.to_dict(),
        "config": cfg.to_dict(),
        "seed": seed if isinstance(seed, (int, np.integer)) else repr(seed),
        "truncated_tail_mass": tail,
        "final_step_sizes_head": np.exp(log_step[:10]).tolist(),
    }
    warn = _tuning_warnings({"within": acceptance["within"]})
    if warn:
        meta["tuning_warning"] = warn
    return PosteriorChain("sieve", samples, dims, lls, acceptance, cfg.burn_in, cfg.thin, meta)


def wavelet_posterior_mcmc(spec: WaveletPriorSpec, obs: Observation, cfg: MCMCConfig, seed: SeedLike,
                           J_max: int = 3) -> PosteriorChain:
    """Metropolis sampler for the uniform wavelet prior.

    State is ``(B, u)`` with ``beta = 2^(-l(delta+1/2)) u``. Each sweep
    updates every ``u`` by a random-walk step (rejected outside
    ``(-B, B)``) and then proposes ``B -> B +- 1``. The likelihood is a
    quadratic form in ``u`` obtained by mapping through the Meyer rows.
    """
    if obs.operator.kind != "deconvolution" and obs.operator.field != "complex-paired":
        raise ConfigurationError("the wavelet sampler needs a deconvolution (Fourier) operator")
    K = obs.K_max
    if K < required_K(J_max):
        raise ConfigurationError(f"observation K_max={K} too small for level {J_max}; need {required_K(J_max)}")
    rng = as_generator(seed)
    W = meyer_matrix(J_max, K)
    scales = spec.scales(J_max)
    P = scales.size
    G = (W * obs.operator.rho[None, :]) * scales[:, None]  # u -> A f
    b = obs.n * (G @ obs.y)
    Q = obs.n * (G @ G.T)
    support, pmf = spec.H.table()
    log_h = {int(r): math.log(p) for r, p in zip(support, pmf)}

    B = int(support[np.argmax(pmf)])
    u = np.zeros(P)
    Qu = np.zeros(P)
    diag = np.diag(Q).copy()
    if cfg.step_sizes is not None:
        log_step = np.log(np.resize(np.asarray(cfg.step_sizes, dtype=float), P))
    else:
        with np.errstate(divide="ignore"):
            log_step = np.log(np.minimum(B, 1.0 / np.sqrt(np.maximum(diag, 1e-300))))

    kept = cfg.kept
    samples = np.zeros((kept, P))
    dims = np.zeros(kept, dtype=int)
    lls = np.zeros(kept)
    n_u = n_u_acc = n_B = n_B_acc = 0
    out = 0
    for it in range(cfg.iters):
        z = rng.standard_normal(P)
        logu = np.log(rng.random(P))
        acc_sweep = np.zeros(P)
        steps = np.exp(log_step)
        for i in range(P):
            d = steps[i] * z[i]
            new = u[i] + d
            if abs(new) >= B:
                continue
            dl = b[i] * d - Qu[i] * d - 0.5 * diag[i] * d * d
            if logu[i] < dl:
                u[i] = new
                Qu += Q[:, i] * d
                acc_sweep[i] = 1.0
        n_u += P
        n_u_acc += int(acc_sweep.sum())
        if cfg.adapt and it < cfg.burn_in:
            log_step = np.minimum(_adapt(log_step, acc_sweep, cfg.target_accept, it), math.log(2.0 * B))
        # radius move
        n_B += 1
        Bp = B + (1 if rng.random() < 0.5 else -1)
        if Bp in log_h and np.max(np.abs(u)) < Bp:
            log_a = log_h[Bp] - log_h[B] + P * (math.log(B) - math.log(Bp))
            if math.log(rng.random()) < log_a:
                B = Bp
                n_B_acc += 1
        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            samples[out] = u * scales
            dims[out] = B
            lls[out] = float(b @ u - 0.5 * u @ Qu)
            out += 1

    acceptance = {"u": n_u_acc / n_u, "B": n_B_acc / n_B if len(log_h) > 1 else None}
    meta = {
        "spec_hash": spec_hash(spec.to_dict()),
        "prior": spec.to_dict(),
        "config": cfg.to_dict(),
        "seed": seed if isinstance(seed, (int, np.integer)) else repr(seed),
        "J_max": J_max,
        "window": "nu(t) = t^2 (3 - 2t)",
    }
    warn = _tuning_warnings({"u": acceptance["u"]})
    if warn:
        meta["tuning_warning"] = warn
    return PosteriorChain("wavelet", samples, dims, lls, acceptance, cfg.burn_in, cfg.thin, meta)


# ---------------------------------------------------------------------------
# contraction functionals


@dataclass(frozen=True)
class MassEstimate:
    estimate: float
    std_error: float
    draws: int


def _distances(post, f0, draws, seed) -> np.ndarray:
    if isinstance(post, ConjugatePosterior):
        return post.distances(f0, draws=draws, seed=seed)
    return post.distances(f0)


def posterior_mass_outside(post, f0: SequenceVector, r: float, draws: int = DEFAULT_CONJUGATE_DRAWS,
                           seed: SeedLike = 0) -> MassEstimate:
    """Estimated ``Pi(||f - f0|| >= r | Y)`` with its binomial standard error."""
    if r < 0:
        raise ConfigurationError("radius must be nonnegative")
    d = _distances(post, f0, draws, seed)
    p = float(np.mean(d >= r))
    return MassEstimate(p, math.sqrt(p * (1 - p) / d.size), d.size)


def nearest_rank_quantile(d: np.ndarray, level: float) -> float:
    d = np.sort(np.asarray(d, dtype=float))
    j = math.ceil(level * d.size)
    return float(d[max(j, 1) - 1])


def contraction_radius(post, f0: SequenceVector, tau: float = 0.1, draws: int = DEFAULT_CONJUGATE_DRAWS,
                       seed: SeedLike = 0) -> float:
    """Nearest-rank ``(1 - tau)`` quantile of ``||f - f0||`` under the posterior."""
    if not 0.0 < tau < 1.0:
        raise ConfigurationError("tau must lie in (0, 1)")
    d = _distances(post, f0, draws, seed)
    if d.size * min(tau, 1.0 - tau) < 1.0:
        raise SamplingError(f"{d.size} draws cannot resolve the {1 - tau:.4g} quantile")
    return nearest_rank_quantile(d, 1.0 - tau)


# ---------------------------------------------------------------------------
# persistence


def save_chain(chain: PosteriorChain, path, coef_cap: int = 50) -> tuple[Path, Path]:
    """Write the chain as columnar CSV plus a JSON metadata sidecar."""
    path = Path(path)
    ncol = min(coef_cap, chain.samples.shape[1])
    dim_name = "M" if chain.kind == "sieve" else "B"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", dim_name, *[f"c{i + 1}" for i in range(ncol)], "loglik"])
        for j in range(len(chain)):
            it = chain.burn_in + j * chain.thin
            w.writerow([it, int(chain.dims[j]), *map(repr, chain.samples[j, :ncol].tolist()), repr(float(chain.loglik[j]))])
    side = path.with_suffix(".json")
    doc = {
        "kind": chain.kind,
        "n_samples": len(chain),
        "n_coefficients": int(chain.samples.shape[1]),
        "coef_columns": ncol,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "acceptance": chain.acceptance,
        **chain.metadata,
    }
    side.write_text(json.dumps(doc, indent=2, default=str))
    return path, side


def load_chain(path) -> PosteriorChain:
    """Read a chain written by :func:`save_chain` (coefficients beyond the cap are absent)."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    with path.open() as fh:
        rows = list(csv.reader(fh))
    body = np.asarray(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    kind = meta.pop("kind")
    acc = meta.pop("acceptance")
    burn, thin = meta.pop("burn_in"), meta.pop("thin")
    return PosteriorChain(kind, body[:, 2:-1], body[:, 1].astype(int), body[:, -1], acc, burn, thin, meta)
