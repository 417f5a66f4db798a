"""Prior families on sequence space: sieve, Gaussian, uniform wavelet series."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats

from ._seeding import SeedLike, as_generator
from .errors import ConfigurationError
from .spectral_core import SequenceVector
from .wavelets import WaveletCoefficients, level_scales


def spec_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# coefficient densities


@dataclass(frozen=True)
class CoefficientDensity:
    """Density ``q`` with a certified floor ``D exp(-d |x|^w) <= q(x)``.

    ``custom`` densities must pass ``logpdf`` and ``sampler`` along with the
    floor constants; the floor is checked numerically on a grid.
    """

    family: str
    D: float
    d: float
    w: float
    logpdf_fn: Callable | None = field(default=None, compare=False, repr=False)
    sampler: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace", "cauchy", "custom"):
            raise ConfigurationError(f"unknown density family {self.family!r}")
        if self.family == "custom" and (self.logpdf_fn is None or self.sampler is None):
            raise ConfigurationError("custom densities need logpdf_fn and sampler")
        if not (self.D > 0 and self.d > 0 and self.w >= 1):
            raise ConfigurationError("floor constants need D > 0, d > 0, w >= 1")

    @classmethod
    def gaussian(cls) -> "CoefficientDensity":
        return cls("gaussian", D=1.0 / math.sqrt(2 * math.pi), d=0.5, w=2.0)

    @classmethod
    def laplace(cls) -> "CoefficientDensity":
        return cls("laplace", D=0.5, d=1.0, w=1.0)

    @classmethod
    def cauchy(cls) -> "CoefficientDensity":
        # e^x / (1 + x^2) is increasing on x >= 0, so the floor is attained at 0.
        return cls("cauchy", D=1.0 / math.pi, d=1.0, w=1.0)

    @classmethod
    def from_name(cls, name: str) -> "CoefficientDensity":
        try:
            return {"gaussian": cls.gaussian, "laplace": cls.laplace, "cauchy": cls.cauchy}[name]()
        except KeyError:
            raise ConfigurationError(f"density {name!r} needs an explicit custom definition") from None

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "gaussian":
            return -0.5 * x**2 - 0.5 * math.log(2 * math.pi)
        if self.family == "laplace":
            return -np.abs(x) - math.log(2.0)
        if self.family == "cauchy":
            return -np.log1p(x**2) - math.log(math.pi)
        return np.asarray(self.logpdf_fn(x), dtype=float)

    def sample(self, rng: np.random.Generator, size):
        if self.family == "gaussian":
            return rng.standard_normal(size)
        if self.family == "laplace":
            return rng.laplace(0.0, 1.0, size)
        if self.family == "cauchy":
            return rng.standard_cauchy(size)
        return np.asarray(self.sampler(rng, size), dtype=float)

    def cdf_interval(self, lo, hi):
        """``P(lo <= X <= hi)`` in closed form for the named families."""
        dist = {"gaussian": stats.norm, "laplace": stats.laplace, "cauchy": stats.cauchy}.get(self.family)
        if dist is None:
            raise ConfigurationError("no closed-form CDF for custom densities")
        return dist.cdf(hi) - dist.cdf(lo)

    def floor_margin(self, grid=None) -> float:
        """``min_x q(x) - D exp(-d |x|^w)`` over a grid (default ``[-10, 10]``).

        Differences within a few ulps of ``q(x)`` count as zero, since the
        named families touch their floor at the origin.
        """
        x = np.linspace(-10, 10, 4001) if grid is None else np.asarray(grid, dtype=float)
        q = np.exp(self.logpdf(x))
        gap = q - self.D * np.exp(-self.d * np.abs(x) ** self.w)
        gap[np.abs(gap) <= 8 * np.finfo(float).eps * q] = 0.0
        return float(np.min(gap))

    def to_dict(self) -> dict:
        return {"family": self.family, "D": self.D, "d": self.d, "w": self.w}


def density_ball_lower_bound(q: CoefficientDensity, z, t: float) -> float:
    """Analytic floor on ``P(|X - z| <= t)`` from the density floor of ``q``.

    Real ``z``: ``2 D t exp(-d (|z| + t)^w)``. A pair ``z = (a, b)`` is read as
    a point of the plane for a bivariate density with the same floor; then
    the disc area enters and the floor is ``pi D t^2 exp(-d (|z| + t)^w)``.
    """
    if not t > 0:
        raise ConfigurationError("ball radius must be positive")
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    if zz.size == 1:
        return float(2.0 * q.D * t * math.exp(-q.d * (abs(zz[0]) + t) ** q.w))
    if zz.size == 2:
        r = float(np.hypot(*zz))
        return float(math.pi * q.D * t * t * math.exp(-q.d * (r + t) ** q.w))
    raise ConfigurationError("z must be a real number or a pair")


# ---------------------------------------------------------------------------
# pmfs and scales


_TAIL_CAP = 100_000


@dataclass(frozen=True)
class TruncationPmf:
    """Law ``h`` of the sieve truncation ``M`` on ``{1, 2, ...}``.

    ``exponential``: ``h(m) ∝ exp(-b m)``; ``stretched``: ``h(m) ∝ exp(-b m^power)``;
    ``custom``: explicit table ``h(1), h(2), ...``; the support is where the
    table is positive.
    """

    kind: str
    b: float = 1.0
    power: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("exponential", "stretched", "custom"):
            raise ConfigurationError(f"unknown truncation law {self.kind!r}")
        if self.kind != "custom" and not self.b > 0:
            raise ConfigurationError("pmf rate b must be positive")
        if self.kind == "custom":
            t = np.asarray(self.table, dtype=float)
            if t.size == 0 or np.any(t < 0) or abs(t.sum() - 1.0) > 1e-10:
                raise ConfigurationError("custom pmf must be nonnegative and sum to 1")

    def _log_weights(self, m: np.ndarray) -> np.ndarray:
        if self.kind == "exponential":
            return -self.b * m
        return -self.b * m**self.power

    def table_for(self, K_max: int) -> tuple[np.ndarray, float]:
        """Pmf on ``1..K_max`` renormalized after truncation, and the discarded tail mass."""
        if self.kind == "custom":
            t = np.asarray(self.table, dtype=float)
            head = t[:K_max]
            tail = float(t[K_max:].sum())
            if head.sum() <= 0:
                raise ConfigurationError(f"custom pmf puts no mass on 1..{K_max}")
            full = np.zeros(K_max)
            full[: head.size] = head
            return full / full.sum(), tail
        m = np.arange(1, max(K_max, 1) + 1, dtype=float)
        lw = self._log_weights(m)
        shift = lw.max()
        head = np.exp(lw - shift)
        # untruncated tail, summed until negligible
        tail = 0.0
        start = K_max + 1
        while start < _TAIL_CAP:
            mm = np.arange(start, start + 4096, dtype=float)
            chunk = np.exp(self._log_weights(mm) - shift)
            tail += chunk.sum()
            if chunk[-1] < 1e-18 * (head.sum() + tail):
                break
            start += 4096
        total = head.sum() + tail
        return head / head.sum(), float(tail / total)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "custom":
            d["table"] = list(self.table)
        else:
            d["b"] = self.b
            if self.kind == "stretched":
                d["power"] = self.power
        return d


@dataclass(frozen=True)
class ScaleSchedule:
    """Coefficient scales ``tau_k``.

    ``constant``: ``value``; ``power``: ``(1+k^2)^(-delta/2 - 1/4)``;
    ``power_log``: ``B3 (1+k^2)^(-gamma0/2) log(max(k, 2))^(-1/w)``;
    ``growing``: ``B4 (1+k^2)^((alpha+1)/2)``.
    """

    kind: str = "constant"
    value: float = 1.0
    delta: float = 0.0
    B3: float = 1.0
    gamma0: float = 0.0
    w: float = 2.0
    B4: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "power_log", "growing"):
            raise ConfigurationError(f"unknown scale schedule {self.kind!r}")

    def values(self, K_max: int) -> np.ndarray:
        k = np.arange(1, K_max + 1, dtype=float)
        if self.kind == "constant":
            return np.full(K_max, float(self.value))
        if self.kind == "power":
            return (1.0 + k**2) ** (-self.delta / 2 - 0.25)
        if self.kind == "power_log":
            return self.B3 * (1.0 + k**2) ** (-self.gamma0 / 2) * np.log(np.maximum(k, 2.0)) ** (-1.0 / self.w)
        return self.B4 * (1.0 + k**2) ** ((self.alpha + 1) / 2)

    def to_dict(self) -> dict:
        keys = {"constant": ("value",), "power": ("delta",), "power_log": ("B3", "gamma0", "w"),
                "growing": ("B4", "alpha")}[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}


# ---------------------------------------------------------------------------
# prior specs


@dataclass(frozen=True)
class SievePriorSpec:
    h: TruncationPmf
    q: CoefficientDensity
    tau: ScaleSchedule = ScaleSchedule()

    family = "sieve"

    def to_dict(self) -> dict:
        return {"family": "sieve", "h": self.h.to_dict(), "q": self.q.to_dict(), "tau": self.tau.to_dict()}

    def tau_values(self, K_max: int) -> np.ndarray:
        return self.tau.values(K_max)

    def sample_batch(self, rng: np.random.Generator, K_max: int, size: int):
        """``size`` independent draws: coefficient matrix and truncation levels."""
        pmf, _ = self.h.table_for(K_max)
        M = rng.choice(np.arange(1, K_max + 1), size=size, p=pmf)
        xi = self.q.sample(rng, (size, K_max))
        mask = np.arange(1, K_max + 1)[None, :] <= M[:, None]
        return xi * self.tau_values(K_max)[None, :] * mask, M


@dataclass(frozen=True)
class GaussianPriorSpec:
    """Centred Gaussian prior with ``tau_k^2 = (1+k^2)^(-delta-1/2)``."""

    delta: float

    family = "gaussian"

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("prior smoothness delta must be positive")

    def tau_values(self, K_max: int) -> np.ndarray:
        k = np.arange(1, K_max + 1, dtype=float)
        return (1.0 + k**2) ** (-self.delta / 2 - 0.25)

    def to_dict(self) -> dict:
        return {"family": "gaussian", "delta": self.delta}

    def sample_batch(self, rng: np.random.Generator, K_max: int, size: int) -> np.ndarray:
        return rng.standard_normal((size, K_max)) * self.tau_values(K_max)[None, :]


@dataclass(frozen=True)
class RadiusPmf:
    """Law of the Hölder radius ``B`` on ``{1, 2, ...}``.

    ``stretched``: ``h(r) ∝ exp(-D r^nu)`` (requires the normalizer <= 1 so
    that ``h(r) >= exp(-D r^nu)``); ``double_exponential``:
    ``h(r) ∝ exp(-exp(D r^nu))``; ``point_mass``: ``B`` with probability 1.
    """

    kind: str
    D: float = 1.0
    nu: float = 1.0
    B: int = 1

    def __post_init__(self):
        if self.kind not in ("stretched", "double_exponential", "point_mass"):
            raise ConfigurationError(f"unknown radius law {self.kind!r}")
        if self.kind == "point_mass":
            if int(self.B) != self.B or self.B < 1:
                raise ConfigurationError("point-mass radius must be a positive integer")
        elif not (self.D > 0 and self.nu > 0):
            raise ConfigurationError("radius law needs D > 0 and nu > 0")
        if self.kind == "stretched":
            r = np.arange(1, 200_000, dtype=float)
            z = np.exp(-self.D * r**self.nu).sum()
            if z > 1.0:
                raise ConfigurationError(
                    f"stretched radius law with D={self.D}, nu={self.nu} has normalizer {z:.3f} > 1; "
                    "h(r) >= exp(-D r^nu) cannot hold"
                )

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Support and pmf (support cut where the remaining mass is below 1e-16)."""
        if self.kind == "point_mass":
            return np.array([int(self.B)]), np.array([1.0])
        r = np.arange(1, 10_000, dtype=float)
        if self.kind == "stretched":
            lw = -self.D * r**self.nu
        else:
            lw = -np.exp(np.minimum(self.D * r**self.nu, 700.0))
        w = np.exp(lw - lw.max())
        p = w / w.sum()
        keep = np.cumsum(p[::-1])[::-1] > 1e-16
        keep[0] = True
        r, p = r[keep], p[keep]
        return r.astype(int), p / p.sum()

    def logpmf(self, r: int) -> float:
        support, p = self.table()
        hit = np.flatnonzero(support == r)
        return float(np.log(p[hit[0]])) if hit.size else -np.inf

    def to_dict(self) -> dict:
        if self.kind == "point_mass":
            return {"kind": "point_mass", "B": int(self.B)}
        return {"kind": self.kind, "D": self.D, "nu": self.nu}


@dataclass(frozen=True)
class WaveletPriorSpec:
    """Uniform wavelet series on a Hölder ball of random integer radius."""

    delta: float
    H: RadiusPmf

    family = "wavelet"

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("Hölder smoothness delta must be positive")

    def scales(self, J_max: int) -> np.ndarray:
        """Envelope ``2^(-l(delta + 1/2))`` over the flat coefficient layout."""
        return level_scales(J_max, self.delta + 0.5)

    def to_dict(self) -> dict:
        return {"family": "wavelet", "delta": self.delta, "H": self.H.to_dict()}

    def sample_batch(self, rng: np.random.Generator, J_max: int, size: int):
        support, p = self.H.table()
        B = rng.choice(support, size=size, p=p)
        u = rng.uniform(-1.0, 1.0, (size, 2 ** (J_max + 1))) * B[:, None]
        return u * self.scales(J_max)[None, :], B


PriorSpec = SievePriorSpec | GaussianPriorSpec | WaveletPriorSpec


def prior_from_dict(doc: dict):
    fam = doc.get("family")
    if fam == "gaussian":
        return GaussianPriorSpec(float(doc["delta"]))
    if fam == "sieve":
        h = TruncationPmf(**{k: (tuple(v) if k == "table" else v) for k, v in doc["h"].items()})
        qd = doc.get("q", "gaussian")
        q = CoefficientDensity.from_name(qd if isinstance(qd, str) else qd["family"])
        tau = ScaleSchedule(**doc.get("tau", {"kind": "constant"}))
        return SievePriorSpec(h, q, tau)
    if fam == "wavelet":
        return WaveletPriorSpec(float(doc["delta"]), RadiusPmf(**doc["H"]))
    raise ConfigurationError(f"unknown prior family {fam!r}")


# ---------------------------------------------------------------------------
# single-draw samplers


@dataclass(frozen=True, eq=False)
class SieveDraw:
    f: SequenceVector
    M: int
    metadata: dict


@dataclass(frozen=True, eq=False)
class WaveletDraw:
    coeffs: WaveletCoefficients
    B: int
    metadata: dict


def _metadata(spec, seed, **extra) -> dict:
    s = seed if isinstance(seed, (int, np.integer)) else repr(seed)
    return {"spec_hash": spec_hash(spec.to_dict()), "seed": s, **extra}


def sample_sieve_prior(spec: SievePriorSpec, K_max: int, seed: SeedLike) -> SieveDraw:
    rng = as_generator(seed)
    coeffs, M = spec.sample_batch(rng, K_max, 1)
    _, tail = spec.h.table_for(K_max)
    meta = _metadata(spec, seed, truncated_tail_mass=tail)
    if tail > 0:
        meta["warning"] = f"truncation law renormalized on 1..{K_max}; discarded mass {tail:.3g}"
    return SieveDraw(SequenceVector(coeffs[0]), int(M[0]), meta)


def sample_gaussian_prior(spec: GaussianPriorSpec, K_max: int, seed: SeedLike) -> SequenceVector:
    rng = as_generator(seed)
    return SequenceVector(spec.sample_batch(rng, K_max, 1)[0])


def sample_wavelet_prior(spec: WaveletPriorSpec, J_max: int, seed: SeedLike) -> WaveletDraw:
    if J_max < 0:
        raise ConfigurationError("J_max must be nonnegative")
    rng = as_generator(seed)
    beta, B = spec.sample_batch(rng, J_max, 1)
    return WaveletDraw(WaveletCoefficients.from_flat(beta[0]), int(B[0]), _metadata(spec, seed))


def gaussian_prior_sobolev_moment(delta: float, s: float, K: int) -> float:
    """Partial sum ``sum_{k<=K} (1+k^2)^(s-delta-1/2)`` of ``E ||f||_{H^s}^2``."""
    k = np.arange(1, K + 1, dtype=float)
    return float(np.sum((1.0 + k**2) ** (s - delta - 0.5)))
