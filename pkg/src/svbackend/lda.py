"""Linear discriminant analysis over speaker-labeled i-vectors.

Scatter matrices follow the usual definitions: between-class scatter is
the session-count-weighted outer product of speaker means around the
global mean, within-class scatter sums session deviations around each
speaker mean.  The projection stacks the leading generalized
eigenvectors of (S_b, S_w + ridge*I) as columns.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .dataset import Dataset

LDA_MAGIC = b"LDA1"


@dataclass(frozen=True)
class LdaTransform:
    """A trained projection: ``a_matrix`` is (D, K), columns sorted by
    descending eigenvalue, each unit length with its largest-magnitude
    entry positive.

    Scatter matrices are kept for inspection when produced by training;
    transforms loaded from disk carry None there.
    """

    a_matrix: np.ndarray
    eigenvalues: np.ndarray
    s_b: np.ndarray | None = None
    s_w: np.ndarray | None = None

    def __post_init__(self) -> None:
        a = np.array(self.a_matrix, dtype=np.float64, copy=True)
        lam = np.array(self.eigenvalues, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise ValueError("a_matrix must be 2-D")
        if a.shape[1] > a.shape[0]:
            raise ValueError("cannot retain more directions than the input dimension")
        if lam.shape != (a.shape[1],):
            raise ValueError("need one eigenvalue per retained column")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be sorted descending")
        a.flags.writeable = False
        lam.flags.writeable = False
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "eigenvalues", lam)
        for name in ("s_b", "s_w"):
            m = getattr(self, name)
            if m is not None:
                m = np.array(m, dtype=np.float64, copy=True)
                if m.shape != (a.shape[0], a.shape[0]):
                    raise ValueError(f"{name} must be (D, D)")
                m.flags.writeable = False
                object.__setattr__(self, name, m)

    @property
    def input_dim(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def output_dim(self) -> int:
        return self.a_matrix.shape[1]


def scatter_matrices(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Between- and within-class scatter of a labeled dataset.

    Speakers are accumulated in sorted-label order so results are
    reproducible for a fixed dataset order.
    """
    if not ds.labeled:
        unlabeled = [iv.id for iv in ds.items if iv.speaker is None]
        raise ValueError(f"dataset has unlabeled items (e.g. '{unlabeled[0]}')")
    if len(ds.speakers) < 2:
        raise ValueError("scatter estimation needs at least two speakers")
    mat = ds.matrix()
    global_mean = mat.mean(axis=0)
    s_b = np.zeros((ds.dim, ds.dim))
    s_w = np.zeros((ds.dim, ds.dim))
    for spk in ds.speakers:
        rows = mat[list(ds.index[spk])]
        mean_s = rows.mean(axis=0)
        centered = rows - mean_s
        s_w += centered.T @ centered
        d = mean_s - global_mean
        s_b += len(rows) * np.outer(d, d)
    return (s_b + s_b.T) / 2.0, (s_w + s_w.T) / 2.0


def train_lda(ds: Dataset, k: int, ridge: float = 1e-6) -> LdaTransform:
    """Solve S_b v = lambda (S_w + ridge*I) v and keep the top-k directions.

    ``ridge`` is relative to trace(S_w)/D; within-class scatter is
    singular whenever speakers have few sessions.  Each retained column
    is renormalized to unit Euclidean length with a deterministic sign.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > ds.dim:
        raise ValueError(f"k={k} exceeds i-vector dimension {ds.dim}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    s_b, s_w = scatter_matrices(ds)
    conditioned = s_w + (ridge * np.trace(s_w) / ds.dim) * np.eye(ds.dim)
    try:
        eigvals, eigvecs = scipy.linalg.eigh(s_b, conditioned)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise ValueError(f"generalized eigendecomposition failed: {e}") from None
    order = np.argsort(eigvals)[::-1][:k]
    lam = eigvals[order]
    a = eigvecs[:, order]
    a = a / np.linalg.norm(a, axis=0)
    flip = np.sign(a[np.abs(a).argmax(axis=0), np.arange(k)])
    a = a * flip
    return LdaTransform(a, lam, s_b=s_b, s_w=s_w)


def apply_lda(t: LdaTransform, ds: Dataset) -> Dataset:
    """Project every i-vector to ``a_matrix.T @ w``; output dim is K."""
    if ds.dim != t.input_dim:
        raise ValueError(f"dimension mismatch: transform expects {t.input_dim}, dataset has {ds.dim}")
    return ds.with_values(ds.matrix() @ t.a_matrix)


def save_lda(t: LdaTransform, path: str | Path) -> None:
    parts = [
        LDA_MAGIC,
        struct.pack("<II", t.input_dim, t.output_dim),
        np.ascontiguousarray(t.eigenvalues, dtype="<f8").tobytes(),
        np.ascontiguousarray(t.a_matrix, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_lda(path: str | Path) -> LdaTransform:
    data = Path(path).read_bytes()
    if data[: len(LDA_MAGIC)] != LDA_MAGIC:
        raise ValueError(f"{path}: bad magic, not an LDA transform file")
    off = len(LDA_MAGIC)
    d, k = struct.unpack_from("<II", data, off)
    off += 8
    expected = off + 8 * (k + d * k)
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    lam = np.frombuffer(data, dtype="<f8", count=k, offset=off)
    off += 8 * k
    a = np.frombuffer(data, dtype="<f8", count=d * k, offset=off).reshape(d, k)
    return LdaTransform(a, lam)
