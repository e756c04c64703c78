"""Inter-dataset variability (IDV) compensation.

The mismatch between a development (out-domain) and an evaluation
(in-domain) i-vector population is summarized by a scatter matrix of
cross-domain differences; whitening that scatter removes the mismatch
directions from all i-vectors.  Speaker labels are never used here.

Two estimators are provided:

* original: mean scatter of out-domain i-vectors around the in-domain
  mean only.
* modified: the original term plus the mirrored term (in-domain
  i-vectors around the out-domain mean), which symmetrizes the estimate
  and uses both populations' spread.

The decorrelating transform ``D`` satisfies ``D @ D.T == inv(S + ridge*I)``
and is realized as the inverse transpose of the Cholesky factor of the
(ridge-conditioned) scatter; compensated i-vectors are ``D.T @ w``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .dataset import Dataset

IDV_MAGIC = b"IDV1"

#: Relative ridge ladder tried on factorization failure, as multiples of
#: mean diagonal mass trace(S)/D.
_RIDGE_LADDER = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)


class IdvVariant(Enum):
    ORIGINAL = "original"
    MODIFIED = "modified"


@dataclass(frozen=True)
class IdvTransform:
    """A learned whitening of the inter-dataset mismatch scatter.

    ``ridge`` is the absolute value actually added to the diagonal
    before factorization (0.0 when none was needed).
    """

    variant: IdvVariant
    s_idv: np.ndarray
    decorrelator: np.ndarray
    ridge: float

    def __post_init__(self) -> None:
        s = np.array(self.s_idv, dtype=np.float64, copy=True)
        d = np.array(self.decorrelator, dtype=np.float64, copy=True)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("s_idv must be square")
        if d.shape != s.shape:
            raise ValueError("decorrelator shape must match s_idv")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        scale = np.linalg.norm(s)
        if scale > 0 and np.linalg.norm(s - s.T) > 1e-10 * scale:
            raise ValueError("s_idv is not symmetric")
        conditioned = s + self.ridge * np.eye(s.shape[0])
        inv = np.linalg.inv(conditioned)
        if np.linalg.norm(d @ d.T - inv) > 1e-8 * np.linalg.norm(inv):
            raise ValueError("decorrelator does not whiten s_idv + ridge*I")
        for name, arr in (("s_idv", s), ("decorrelator", d)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.s_idv.shape[0]


def _mismatch_scatter(vectors: np.ndarray, center: np.ndarray) -> np.ndarray:
    diffs = vectors - center
    s = diffs.T @ diffs / vectors.shape[0]
    return (s + s.T) / 2.0


def _cholesky_decorrelator(s: np.ndarray, ridge_factor: float) -> tuple[np.ndarray, float]:
    """Return (inverse-transpose Cholesky factor, absolute ridge used).

    Tries the requested relative ridge first, then escalates through the
    ladder; the scatter is a finite sum of outer products and may be
    numerically singular.
    """
    if ridge_factor < 0:
        raise ValueError("ridge must be nonnegative")
    dim = s.shape[0]
    mean_diag = np.trace(s) / dim
    factors = [ridge_factor] + [t for t in _RIDGE_LADDER if t > ridge_factor]
    for factor in factors:
        ridge = factor * mean_diag
        try:
            chol = np.linalg.cholesky(s + ridge * np.eye(dim))
        except np.linalg.LinAlgError:
            continue
        inv_chol = solve_triangular(chol, np.eye(dim), lower=True)
        return inv_chol.T, ridge
    raise ValueError(
        f"mismatch scatter could not be factorized even with ridge {_RIDGE_LADDER[-1]:g}*trace/dim"
    )


def _check_pair(out_domain: Dataset, in_domain: Dataset) -> None:
    if len(out_domain) == 0 or len(in_domain) == 0:
        raise ValueError("both datasets must be non-empty")
    if out_domain.dim != in_domain.dim:
        raise ValueError(
            f"dimension mismatch: out-domain {out_domain.dim} vs in-domain {in_domain.dim}"
        )


def estimate_modified_idv(
    out_domain: Dataset, in_domain: Dataset, ridge: float = 1e-6
) -> IdvTransform:
    """Estimate the symmetrized mismatch scatter and its whitening.

    The scatter is the mean outer product of out-domain i-vectors around
    the in-domain mean plus the mean outer product of in-domain
    i-vectors around the out-domain mean; it is symmetric under swapping
    the two datasets.  ``ridge`` is relative to trace(S)/dim.
    """
    _check_pair(out_domain, in_domain)
    out_m, in_m = out_domain.matrix(), in_domain.matrix()
    s = _mismatch_scatter(out_m, in_m.mean(axis=0)) + _mismatch_scatter(in_m, out_m.mean(axis=0))
    decorrelator, used = _cholesky_decorrelator(s, ridge)
    return IdvTransform(IdvVariant.MODIFIED, s, decorrelator, used)


def estimate_original_idv(
    out_domain: Dataset, in_domain: Dataset, ridge: float = 1e-6
) -> IdvTransform:
    """Single-sided variant: out-domain scatter around the in-domain mean only."""
    _check_pair(out_domain, in_domain)
    s = _mismatch_scatter(out_domain.matrix(), in_domain.matrix().mean(axis=0))
    decorrelator, used = _cholesky_decorrelator(s, ridge)
    return IdvTransform(IdvVariant.ORIGINAL, s, decorrelator, used)


def apply_idv(t: IdvTransform, ds: Dataset) -> Dataset:
    """Map every i-vector w to ``decorrelator.T @ w``; metadata is preserved."""
    if ds.dim != t.dim:
        raise ValueError(f"dimension mismatch: transform {t.dim}, dataset {ds.dim}")
    return ds.with_values(ds.matrix() @ t.decorrelator)


def save_idv(t: IdvTransform, path: str | Path) -> None:
    parts = [
        IDV_MAGIC,
        struct.pack("<BId", 1 if t.variant is IdvVariant.MODIFIED else 0, t.dim, t.ridge),
        np.ascontiguousarray(t.s_idv, dtype="<f8").tobytes(),
        np.ascontiguousarray(t.decorrelator, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_idv(path: str | Path) -> IdvTransform:
    data = Path(path).read_bytes()
    if data[: len(IDV_MAGIC)] != IDV_MAGIC:
        raise ValueError(f"{path}: bad magic, not an IDV transform file")
    off = len(IDV_MAGIC)
    variant_byte, dim, ridge = struct.unpack_from("<BId", data, off)
    off += struct.calcsize("<BId")
    expected = off + 2 * dim * dim * 8
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    s = np.frombuffer(data, dtype="<f8", count=dim * dim, offset=off).reshape(dim, dim)
    off += dim * dim * 8
    d = np.frombuffer(data, dtype="<f8", count=dim * dim, offset=off).reshape(dim, dim)
    variant = IdvVariant.MODIFIED if variant_byte else IdvVariant.ORIGINAL
    return IdvTransform(variant, s, d, ridge)
