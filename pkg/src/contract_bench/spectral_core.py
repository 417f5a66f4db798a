"""Diagonal sequence-space model ``Y_k = rho_k f_k + Z_k / sqrt(n)``.

Coordinates are 1-based in the mathematics and 0-based in the arrays:
``coeffs[k - 1]`` holds ``f_k``. For the deconvolution operator the
complex Fourier basis ``exp(2 pi i m x)`` is replaced by the real
orthonormal trigonometric basis

    k = 1            -> 1
    k = 2m, 2m + 1   -> sqrt(2) cos(2 pi m x), sqrt(2) sin(2 pi m x)

so that every norm in the package is a real l2 norm. A real measure acts
on each (cos, sin) pair as a rotation scaled by ``|mu_hat_m|``, hence the
singular values are ``|mu_hat_m|`` (repeated) and the conjugate basis is
the correspondingly rotated pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from ._seeding import SeedLike, as_generator
from .errors import ConfigurationError, InjectivityError

OPERATOR_KINDS = ("identity", "mild_power", "severe_exp", "deconvolution", "heat", "radon_surrogate")

# Smallest singular value whose reciprocal is still a finite double.
_RHO_FLOOR = 1.0 / np.finfo(float).max


@dataclass(frozen=True)
class IllPosedness:
    """Classification of the singular-value decay.

    ``variant`` is ``"mild"`` (polynomial, regularity ``alpha``),
    ``"severe"`` (``(1+k^2)^(-a/2) exp(-c0 k^beta)`` envelopes) or
    ``"custom"`` (no declared envelope).
    """

    variant: str
    alpha: float | None = None
    beta: float | None = None
    c0: float | None = None
    alpha0: float = 0.0
    alpha1: float = 0.0

    def __post_init__(self):
        if self.variant == "mild":
            if self.alpha is None or self.alpha < 0:
                raise ConfigurationError("mild ill-posedness needs alpha >= 0")
        elif self.variant == "severe":
            if self.beta is None or self.beta <= 0 or self.c0 is None or self.c0 <= 0:
                raise ConfigurationError("severe ill-posedness needs beta > 0 and c0 > 0")
        elif self.variant != "custom":
            raise ConfigurationError(f"unknown ill-posedness variant {self.variant!r}")

    @classmethod
    def mild(cls, alpha: float) -> "IllPosedness":
        return cls("mild", alpha=float(alpha))

    @classmethod
    def severe(cls, beta: float, c0: float, alpha0: float = 0.0, alpha1: float = 0.0) -> "IllPosedness":
        return cls("severe", beta=float(beta), c0=float(c0), alpha0=float(alpha0), alpha1=float(alpha1))

    def log_weight(self, k: np.ndarray, upper: bool) -> np.ndarray:
        """Log of the envelope shape (without constant) at indices ``k``."""
        k = np.asarray(k, dtype=float)
        if self.variant == "mild":
            return -0.5 * self.alpha * np.log1p(k**2)
        if self.variant == "severe":
            a = self.alpha1 if upper else self.alpha0
            return -0.5 * a * np.log1p(k**2) - self.c0 * k**self.beta
        raise ConfigurationError("custom ill-posedness has no envelope")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    kind: str
    params: dict
    rho: np.ndarray
    classification: IllPosedness
    field: str = "real"

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim != 1 or rho.size == 0:
            raise ConfigurationError("rho must be a non-empty 1-d array")
        if not np.all(np.isfinite(rho)):
            raise ConfigurationError("rho must be finite")
        bad = np.flatnonzero(np.abs(rho) < _RHO_FLOOR)
        if bad.size:
            raise InjectivityError(
                f"singular value rho_{bad[0] + 1} = {rho[bad[0]]:.3g} vanishes; "
                "the operator must be injective (reduce K_max)"
            )
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def K_max(self) -> int:
        return self.rho.size

    def envelope_constants(self) -> tuple[float, float]:
        """Empirical ``(C1, C2)`` with ``C1 w_k <= |rho_k| <= C2 w_k`` on ``k <= K_max``."""
        k = np.arange(1, self.K_max + 1)
        logr = np.log(np.abs(self.rho))
        c1 = np.exp(np.min(logr - self.classification.log_weight(k, upper=False)))
        c2 = np.exp(np.max(logr - self.classification.log_weight(k, upper=True)))
        return float(c1), float(c2)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "K_max": self.K_max,
            "rho": self.rho.tolist(),
            "classification": self.classification.to_dict(),
            "field": self.field,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SpectralOperator":
        op = make_operator(doc["kind"], doc.get("params", {}), int(doc["K_max"]))
        if "rho" in doc and not np.allclose(op.rho, doc["rho"], rtol=1e-12, atol=0):
            raise ConfigurationError("stored rho disagrees with the operator parameters")
        return op


@dataclass(frozen=True, eq=False)
class SequenceVector:
    coeffs: np.ndarray
    basis_tag: str = "svd"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ConfigurationError("coefficients must be 1-d")
        if not np.all(np.isfinite(c)):
            raise ConfigurationError("coefficients must be finite")
        if self.basis_tag not in ("svd", "wavelet"):
            raise ConfigurationError(f"unknown basis tag {self.basis_tag!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K_max(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def basis_vector(cls, k: int, K_max: int, basis_tag: str = "svd") -> "SequenceVector":
        c = np.zeros(K_max)
        c[k - 1] = 1.0
        return cls(c, basis_tag)

    def to_json(self) -> dict:
        return {"basis_tag": self.basis_tag, "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "SequenceVector":
        return cls(np.asarray(doc["coeffs"], dtype=float), doc.get("basis_tag", "svd"))


@dataclass(frozen=True, eq=False)
class Observation:
    n: float
    y: np.ndarray
    operator: SpectralOperator
    seed: Any = None

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.shape != (self.operator.K_max,):
            raise ConfigurationError("observation length must equal the operator's K_max")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def K_max(self) -> int:
        return self.y.size

    def to_json(self) -> dict:
        seed = self.seed if isinstance(self.seed, (int, type(None))) else str(self.seed)
        return {"n": self.n, "y": self.y.tolist(), "operator": self.operator.to_json(), "seed": seed}

    @classmethod
    def from_json(cls, doc: dict) -> "Observation":
        return cls(float(doc["n"]), np.asarray(doc["y"], dtype=float),
                   SpectralOperator.from_json(doc["operator"]), doc.get("seed"))


@dataclass(frozen=True, eq=False)
class BasisMap:
    """Rows ``phi_k = sum_i phi_{k,i} e_i`` with finite support.

    ``rows[k - 1] = (indices, values)``; indices are 0-based positions in
    the spectral basis.
    """

    rows: tuple[tuple[np.ndarray, np.ndarray], ...]
    name: str = "custom"

    def __post_init__(self):
        clean = []
        for idx, val in self.rows:
            idx = np.asarray(idx, dtype=np.intp)
            val = np.asarray(val, dtype=float)
            if idx.shape != val.shape or idx.ndim != 1:
                raise ConfigurationError("basis row indices and values must align")
            clean.append((idx, val))
        object.__setattr__(self, "rows", tuple(clean))

    def __len__(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, K_max: int) -> "BasisMap":
        one = np.ones(1)
        return cls(tuple((np.array([i]), one) for i in range(K_max)), name="identity")

    @classmethod
    def from_dense(cls, W: np.ndarray, name: str = "custom", tol: float = 0.0) -> "BasisMap":
        rows = []
        for w in np.asarray(W, dtype=float):
            idx = np.flatnonzero(np.abs(w) > tol)
            rows.append((idx, w[idx]))
        return cls(tuple(rows), name=name)

    def row(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if not 1 <= k <= len(self.rows):
            raise ConfigurationError(f"basis row {k} is not populated")
        return self.rows[k - 1]

    @property
    def width(self) -> int:
        """Smallest spectral truncation containing every row."""
        return 1 + max((int(idx.max()) for idx, _ in self.rows if idx.size), default=-1)

    def to_dense(self, K_max: int | None = None, n_rows: int | None = None) -> np.ndarray:
        K = self.width if K_max is None else K_max
        m = len(self.rows) if n_rows is None else n_rows
        if K < self.width and m == len(self.rows):
            raise ConfigurationError("K_max is smaller than the basis support")
        W = np.zeros((m, K))
        for r, (idx, val) in enumerate(self.rows[:m]):
            W[r, idx] = val
        return W

    def gram_error(self) -> float:
        """Max deviation of the row Gram matrix from the identity."""
        W = self.to_dense()
        return float(np.max(np.abs(W @ W.T - np.eye(len(self.rows)))))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "rows": [[[int(i) + 1, float(v)] for i, v in zip(idx, val)] for idx, val in self.rows],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BasisMap":
        rows = []
        for r in doc["rows"]:
            arr = np.asarray(r, dtype=float).reshape(-1, 2)
            rows.append((arr[:, 0].astype(np.intp) - 1, arr[:, 1]))
        return cls(tuple(rows), name=doc.get("name", "custom"))


# ---------------------------------------------------------------------------
# operators


def _require(params: dict, key: str, positive: bool = False) -> float:
    if key not in params:
        raise ConfigurationError(f"missing operator parameter {key!r}")
    v = float(params[key])
    if positive and not v > 0:
        raise ConfigurationError(f"operator parameter {key!r} must be positive")
    return v


def frequency_of_index(K_max: int) -> np.ndarray:
    """Fourier frequency ``m`` carried by each real trigonometric coordinate."""
    return np.arange(1, K_max + 1) // 2


def measure_fourier(atoms: Iterable[Sequence[float]] = (), density: Sequence[float] | None = None,
                    max_freq: int = 0) -> np.ndarray:
    """Fourier coefficients ``mu_hat_m = int exp(-2 pi i m x) dmu(x)``, ``m = 0..max_freq``.

    ``atoms`` are ``(location, mass)`` pairs; ``density`` is sampled on the
    uniform grid ``j / N`` of the torus and transformed by the FFT.
    """
    m = np.arange(max_freq + 1)
    out = np.zeros(max_freq + 1, dtype=complex)
    for loc, mass in atoms:
        out += float(mass) * np.exp(-2j * np.pi * m * float(loc))
    if density is not None:
        g = np.asarray(density, dtype=float)
        N = g.size
        if N < 2 * max_freq + 1:
            raise ConfigurationError(
                f"density grid of {N} points cannot resolve frequency {max_freq}; need >= {2 * max_freq + 1}"
            )
        out += np.fft.fft(g)[: max_freq + 1] / N
    return out


def _classification_from_params(params: dict) -> IllPosedness:
    if "alpha" in params:
        return IllPosedness.mild(params["alpha"])
    if "beta" in params and "c0" in params:
        return IllPosedness.severe(params["beta"], params["c0"], params.get("alpha0", 0.0), params.get("alpha1", 0.0))
    return IllPosedness("custom")


def make_operator(kind: str, params: dict | None, K_max: int) -> SpectralOperator:
    """Build a diagonal forward operator with singular values for ``k <= K_max``.

    Kinds and parameters:

    * ``identity`` -- direct observation, ``rho_k = 1``.
    * ``mild_power`` -- ``alpha``, optional ``scale``: ``scale (1+k^2)^(-alpha/2)``.
    * ``severe_exp`` -- ``beta``, ``c0``, optional ``alpha1``, ``scale``:
      ``scale (1+k^2)^(-alpha1/2) exp(-c0 k^beta)``.
    * ``heat`` -- ``T > 0``: ``exp(-pi^2 k^2 T)`` in the sine basis.
    * ``deconvolution`` -- ``atoms`` (list of ``[location, mass]``) and/or
      ``density`` (uniform grid on [0, 1)); optional declared ``alpha`` or
      ``beta``/``c0`` for the classification.
    * ``radon_surrogate`` -- mild decay with ``alpha = 1/2``.
    """
    params = dict(params or {})
    K_max = int(K_max)
    if K_max < 1:
        raise ConfigurationError("K_max must be positive")
    k = np.arange(1, K_max + 1, dtype=float)
    fld = "real"
    if kind == "identity":
        rho = np.ones(K_max)
        cls = IllPosedness.mild(0.0)
    elif kind == "mild_power":
        alpha = _require(params, "alpha")
        if alpha < 0:
            raise ConfigurationError("alpha must be nonnegative")
        rho = params.get("scale", 1.0) * (1.0 + k**2) ** (-alpha / 2)
        cls = IllPosedness.mild(alpha)
    elif kind == "severe_exp":
        beta = _require(params, "beta", positive=True)
        c0 = _require(params, "c0", positive=True)
        a1 = float(params.get("alpha1", 0.0))
        rho = params.get("scale", 1.0) * np.exp(-0.5 * a1 * np.log1p(k**2) - c0 * k**beta)
        cls = IllPosedness.severe(beta, c0, a1, a1)
    elif kind == "heat":
        T = _require(params, "T", positive=True)
        rho = np.exp(-np.pi**2 * k**2 * T)
        cls = IllPosedness.severe(2.0, np.pi**2 * T)
    elif kind == "radon_surrogate":
        rho = (1.0 + k**2) ** -0.25
        cls = IllPosedness.mild(0.5)
    elif kind == "deconvolution":
        atoms = params.get("atoms", [])
        density = params.get("density")
        if not atoms and density is None:
            raise ConfigurationError("deconvolution needs atoms and/or a gridded density")
        freqs = frequency_of_index(K_max)
        mu_hat = measure_fourier(atoms, density, int(freqs.max()))
        rho = np.abs(mu_hat)[freqs]
        # cancellations leave rounding residue of the order eps * total variation
        tv = sum(abs(float(m)) for _, m in atoms) + (float(np.mean(np.abs(density))) if density is not None else 0.0)
        rho[rho <= 64 * np.finfo(float).eps * tv] = 0.0
        cls = _classification_from_params(params)
        fld = "complex-paired"
    else:
        raise ConfigurationError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    return SpectralOperator(kind, params, rho, cls, fld)


# ---------------------------------------------------------------------------
# norms and simulation


def sobolev_norm(f: SequenceVector, s: float) -> float:
    """``(sum_k f_k^2 (1+k^2)^s)^(1/2)`` over the stored coordinates."""
    c = f.coeffs
    k = np.arange(1, c.size + 1, dtype=float)
    return float(math.sqrt(np.sum(c**2 * np.exp(s * np.log1p(k**2)))))


def operator_weak_norm(f: SequenceVector, op: SpectralOperator) -> float:
    """``||A f||_2 = (sum_k rho_k^2 f_k^2)^(1/2)``."""
    if f.K_max != op.K_max:
        raise ConfigurationError("vector and operator truncations differ")
    return float(np.linalg.norm(op.rho * f.coeffs))


def simulate_observation(f0: SequenceVector, op: SpectralOperator, n: float, seed: SeedLike) -> Observation:
    if not n > 0:
        raise ConfigurationError("noise level n must be positive")
    if f0.K_max != op.K_max:
        raise ConfigurationError("truth and operator truncations differ")
    rng = as_generator(seed)
    z = rng.standard_normal(op.K_max)
    return Observation(float(n), op.rho * f0.coeffs + z / math.sqrt(n), op, seed)


def ill_posedness_delta(bm: BasisMap, op: SpectralOperator, k: int) -> float:
    """``delta_k = min |rho_i|`` over spectral indices touched by ``phi_1..phi_k``."""
    touched = np.unique(np.concatenate([bm.row(m)[0] for m in range(1, k + 1)]))
    if touched.size == 0:
        raise ConfigurationError(f"rows 1..{k} have empty support")
    if touched.max() >= op.K_max:
        raise ConfigurationError("basis support exceeds the operator truncation")
    return float(np.min(np.abs(op.rho[touched])))


def delta_sequence(bm: BasisMap, op: SpectralOperator, k_max: int | None = None) -> np.ndarray:
    """All of ``delta_1..delta_kmax`` in one pass."""
    k_max = len(bm) if k_max is None else k_max
    out = np.empty(k_max)
    cur = np.inf
    for m in range(1, k_max + 1):
        idx = bm.row(m)[0]
        if idx.size:
            if idx.max() >= op.K_max:
                raise ConfigurationError("basis support exceeds the operator truncation")
            cur = min(cur, float(np.min(np.abs(op.rho[idx]))))
        if not np.isfinite(cur):
            raise ConfigurationError(f"rows 1..{m} have empty support")
        out[m - 1] = cur
    return out


def truncation_tail_bound(f0: SequenceVector, gamma: float, K_max: int | None = None) -> float:
    """Bound ``||f0 - P_K f0|| <= ||f0||_{H^gamma} K^(-gamma)`` for auditing truncation."""
    K = f0.K_max if K_max is None else K_max
    return sobolev_norm(f0, gamma) * K ** (-gamma)
