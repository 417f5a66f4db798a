"""Periodized Meyer wavelets built directly in the Fourier domain.

The periodized wavelet ``psi_jk`` has Fourier coefficients

    c_m = 2^(-j/2) Psi_hat(m / 2^j) exp(-2 pi i m k / 2^j),   m in Z,

where ``Psi_hat`` is the continuous Meyer transform (frequency in cycles).
Since ``Psi_hat`` vanishes outside ``1/3 <= |w| <= 4/3`` the row is a
finite trigonometric polynomial, so periodization needs no aliasing
decisions. The scaling function at level 0 periodizes to the constant 1.

Flat coefficient order: ``[u, beta_00, beta_10, beta_11, beta_20, ...]``,
i.e. ``beta_lk`` sits at position ``2^l + k`` (0-based).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .spectral_core import BasisMap, SequenceVector

WINDOW = "nu(t) = t^2 (3 - 2t)"
BAND_LOW = 1.0 / 3.0
BAND_HIGH = 4.0 / 3.0  # realized support constant a


def meyer_window(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def meyer_psi_hat(w):
    """Continuous Meyer wavelet transform ``int Psi(x) exp(-2 pi i w x) dx``."""
    w = np.asarray(w, dtype=float)
    a = np.abs(w)
    mag = np.zeros_like(a)
    lo = (a >= BAND_LOW) & (a <= 2.0 / 3.0)
    hi = (a > 2.0 / 3.0) & (a <= BAND_HIGH)
    mag[lo] = np.sin(0.5 * np.pi * meyer_window(3.0 * a[lo] - 1.0))
    mag[hi] = np.cos(0.5 * np.pi * meyer_window(1.5 * a[hi] - 1.0))
    return mag * np.exp(1j * np.pi * w)


def meyer_phi_hat(w):
    w = np.asarray(w, dtype=float)
    a = np.abs(w)
    out = np.where(a <= BAND_LOW, 1.0, 0.0)
    mid = (a > BAND_LOW) & (a <= 2.0 / 3.0)
    out[mid] = np.cos(0.5 * np.pi * meyer_window(3.0 * a[mid] - 1.0))
    return out


@dataclass(frozen=True)
class FourierRow:
    """Nonzero complex Fourier coefficients of one periodized basis function."""

    freqs: np.ndarray
    values: np.ndarray

    def real_row(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates in the real trigonometric basis (0-based indices)."""
        idx, val = [], []
        for m, c in zip(self.freqs, self.values):
            if m == 0:
                idx.append(0)
                val.append(c.real)
            elif m > 0:
                idx += [2 * m - 1, 2 * m]
                val += [np.sqrt(2.0) * c.real, -np.sqrt(2.0) * c.imag]
        idx = np.asarray(idx, dtype=np.intp)
        val = np.asarray(val, dtype=float)
        keep = val != 0.0
        order = np.argsort(idx[keep])
        return idx[keep][order], val[keep][order]


def band_limits(j: int) -> tuple[int, int]:
    """Integer frequencies ``lo <= |m| <= hi`` that level ``j`` may touch."""
    return int(np.ceil(2**j * BAND_LOW)), int(np.floor(2**j * BAND_HIGH))


def required_K(J_max: int) -> int:
    """Real-basis truncation needed to hold every row up to level ``J_max``."""
    return 2 * band_limits(J_max)[1] + 1


def meyer_fourier_coefficients(j: int, k: int, K_max: int) -> FourierRow:
    if j < 0 or not 0 <= k < 2**j:
        raise ConfigurationError(f"invalid wavelet index (j={j}, k={k})")
    lo, hi = band_limits(j)
    if 2 * hi + 1 > K_max:
        raise ConfigurationError(f"level {j} reaches frequency {hi}; needs K_max >= {2 * hi + 1}")
    pos = np.arange(lo, hi + 1)
    m = np.concatenate([-pos[::-1], pos])
    c = 2.0 ** (-j / 2) * meyer_psi_hat(m / 2.0**j) * np.exp(-2j * np.pi * m * k / 2.0**j)
    nz = np.abs(c) > 0.0
    return FourierRow(m[nz], c[nz])


def meyer_scaling_coefficients() -> FourierRow:
    return FourierRow(np.array([0]), np.array([1.0 + 0j]))


@lru_cache(maxsize=32)
def _meyer_rows(J_max: int) -> tuple:
    rows = [meyer_scaling_coefficients().real_row()]
    K = required_K(J_max)
    for j in range(J_max + 1):
        for k in range(2**j):
            rows.append(meyer_fourier_coefficients(j, k, K).real_row())
    return tuple(rows)


def meyer_basis_map(J_max: int) -> BasisMap:
    """BasisMap of the scaling function and all wavelets up to level ``J_max``."""
    if J_max < 0:
        raise ConfigurationError("J_max must be nonnegative")
    return BasisMap(_meyer_rows(J_max), name=f"meyer(J={J_max})")


@lru_cache(maxsize=32)
def _dense(J_max: int, K_max: int) -> np.ndarray:
    W = meyer_basis_map(J_max).to_dense(K_max)
    W.setflags(write=False)
    return W


def meyer_matrix(J_max: int, K_max: int | None = None) -> np.ndarray:
    """Dense ``2^(J+1) x K`` synthesis matrix; rows are orthonormal."""
    K = required_K(J_max) if K_max is None else K_max
    if K < required_K(J_max):
        raise ConfigurationError(f"K_max={K} too small for level {J_max}")
    return _dense(J_max, K)


@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    scaling: float
    details: tuple

    def __post_init__(self):
        det = tuple(np.asarray(d, dtype=float) for d in self.details)
        for l, d in enumerate(det):
            if d.shape != (2**l,):
                raise ConfigurationError(f"level {l} must hold {2**l} coefficients")
            if not np.all(np.isfinite(d)):
                raise ConfigurationError("wavelet coefficients must be finite")
        if not np.isfinite(self.scaling):
            raise ConfigurationError("scaling coefficient must be finite")
        object.__setattr__(self, "scaling", float(self.scaling))
        object.__setattr__(self, "details", det)

    @property
    def J_max(self) -> int:
        return len(self.details) - 1

    def flat(self) -> np.ndarray:
        return np.concatenate([[self.scaling], *self.details])

    @classmethod
    def from_flat(cls, theta) -> "WaveletCoefficients":
        theta = np.asarray(theta, dtype=float)
        J1 = int(round(np.log2(theta.size)))
        if 2**J1 != theta.size or J1 < 1:
            raise ConfigurationError("flat wavelet vector must have length 2^(J+1)")
        return cls(theta[0], tuple(theta[2**l: 2 ** (l + 1)] for l in range(J1)))

    @classmethod
    def zeros(cls, J_max: int) -> "WaveletCoefficients":
        return cls.from_flat(np.zeros(2 ** (J_max + 1)))


def level_scales(J_max: int, s: float) -> np.ndarray:
    """Per-position factor ``2^(-l s)`` over the flat layout (1 for the scaling term)."""
    out = np.ones(2 ** (J_max + 1))
    for l in range(J_max + 1):
        out[2**l: 2 ** (l + 1)] = 2.0 ** (-l * s)
    return out


def wavelet_analysis(f: SequenceVector, J_max: int) -> WaveletCoefficients:
    if f.basis_tag != "svd":
        raise ConfigurationError("analysis expects Fourier (svd-tagged) coefficients")
    K = max(f.K_max, required_K(J_max))
    c = np.zeros(K)
    c[: f.K_max] = f.coeffs
    return WaveletCoefficients.from_flat(meyer_matrix(J_max, K) @ c)


def wavelet_synthesis(wc: WaveletCoefficients, K_max: int | None = None) -> SequenceVector:
    W = meyer_matrix(wc.J_max, K_max)
    return SequenceVector(wc.flat() @ W, "svd")


def besov_norm(wc: WaveletCoefficients, s: float, p, q) -> float:
    """Sequence-space Besov norm for ``(p, q)`` in ``{(2, 2), (inf, inf)}``."""
    p = float(p)
    q = float(q)
    if (p, q) == (2.0, 2.0):
        levels = np.array([2.0 ** (l * s) * np.linalg.norm(d) for l, d in enumerate(wc.details)])
        return abs(wc.scaling) + float(np.sqrt(np.sum(levels**2)))
    if np.isinf(p) and np.isinf(q):
        sup = max((2.0 ** (l * (s + 0.5)) * np.max(np.abs(d)) for l, d in enumerate(wc.details)), default=0.0)
        return max(abs(wc.scaling), float(sup))
    raise ConfigurationError(f"unsupported Besov indices (p={p}, q={q})")
