"""Length-normalized Gaussian PLDA: training, scoring, and score containers.

The generative model for a projected, length-normalized i-vector is

    w = mean + u1 @ x + eps,    x ~ N(0, I_Q),  eps ~ N(0, inv(lambda_prec))

so between-speaker covariance is ``u1 @ u1.T`` (rank Q) and
within-speaker covariance is the full-rank ``inv(lambda_prec)``.

Training is EM over per-speaker latent factors.  With n_s sessions of
speaker s and centered session sum f_s:

  E-step:  P_s = I + n_s * u1.T @ lam @ u1
           xhat_s = inv(P_s) @ u1.T @ lam @ f_s
           <x x.T>_s = inv(P_s) + xhat_s xhat_s.T
  M-step:  u1   <- (sum_s f_s xhat_s.T) @ inv(sum_s n_s <x x.T>_s)
           within <- (1/N) sum_s sum_r (w_r - u1 xhat_s)(...)T
                     + (1/N) sum_s n_s u1 inv(P_s) u1.T
           lambda_prec <- inv(within)

with the mean frozen to the global data mean.  Both M-step updates
jointly maximize the expected complete-data log-likelihood, so the
exact marginal log-likelihood is non-decreasing across iterations.

Verification scoring is the log-likelihood ratio of "same speaker"
against "independent speakers" for a pair of i-vectors, evaluated in
closed form from the model covariances.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dataset import Dataset, Trial

PLDA_MAGIC = b"PLDA1"

_LOG_2PI = math.log(2.0 * math.pi)

#: Conditioning guard: relative ridge applied to the within covariance
#: before inversion when its condition number exceeds this bound.
_COND_LIMIT = 1e12
_COND_RIDGE = 1e-8


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _spd_inverse(m: np.ndarray, what: str) -> np.ndarray:
    """Invert a symmetric PSD matrix, ridging first if badly conditioned."""
    dim = m.shape[0]
    eigvals = np.linalg.eigvalsh(m)
    lo, hi = eigvals[0], eigvals[-1]
    if lo <= 0 or hi > _COND_LIMIT * lo:
        m = m + (_COND_RIDGE * np.trace(m) / dim) * np.eye(dim)
    try:
        inv = cho_solve(cho_factor(m), np.eye(dim))
    except np.linalg.LinAlgError as e:
        raise ValueError(f"{what} is not positive definite: {e}") from None
    return _sym(inv)


def _spd_logdet(m: np.ndarray) -> float:
    chol = np.linalg.cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


@dataclass(frozen=True, eq=False)
class PldaModel:
    """Trained model parameters plus derived covariance caches.

    ``loglik_trace`` holds the marginal log-likelihood after
    initialization and after each EM iteration; it is not persisted.
    """

    mean: np.ndarray
    u1: np.ndarray
    lambda_prec: np.ndarray
    loglik_trace: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=np.float64, copy=True)
        u1 = np.array(self.u1, dtype=np.float64, copy=True)
        lam = np.array(self.lambda_prec, dtype=np.float64, copy=True)
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        k = mean.shape[0]
        if u1.ndim != 2 or u1.shape[0] != k:
            raise ValueError("u1 must be (K, Q)")
        if u1.shape[1] > k:
            raise ValueError("more eigenvoices than dimensions")
        if lam.shape != (k, k):
            raise ValueError("lambda_prec must be (K, K)")
        scale = np.linalg.norm(lam)
        if scale > 0 and np.linalg.norm(lam - lam.T) > 1e-10 * scale:
            raise ValueError("lambda_prec is not symmetric")
        try:
            np.linalg.cholesky(lam)
        except np.linalg.LinAlgError:
            raise ValueError("lambda_prec is not positive definite") from None
        sigma_within = cho_solve(cho_factor(lam), np.eye(k))
        sigma_within = _sym(sigma_within)
        sigma_between = _sym(u1 @ u1.T)
        for name, arr in (
            ("mean", mean),
            ("u1", u1),
            ("lambda_prec", lam),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        for name, arr in (
            ("sigma_within", sigma_within),
            ("sigma_between", sigma_between),
            ("sigma_total", sigma_within + sigma_between),
        ):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    # derived caches, filled in __post_init__
    sigma_within: np.ndarray = field(init=False, repr=False)
    sigma_between: np.ndarray = field(init=False, repr=False)
    sigma_total: np.ndarray = field(init=False, repr=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def n_eigenvoices(self) -> int:
        return self.u1.shape[1]


def length_normalize(ds: Dataset) -> Dataset:
    """Project every i-vector onto the unit sphere."""
    mat = ds.matrix()
    norms = np.linalg.norm(mat, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cannot length-normalize zero vector '{ds.items[zero[0]].id}'")
    return ds.with_values(mat / norms[:, None])


@dataclass(frozen=True)
class _SpeakerStats:
    """Sufficient statistics of centered data, grouped by session count."""

    f: np.ndarray  # (S, K) per-speaker session sums
    ns: np.ndarray  # (S,) session counts
    s_phiphi: np.ndarray  # (K, K) second moment of all centered sessions
    n_total: int
    groups: tuple[tuple[int, np.ndarray], ...]  # (session count, speaker rows)


def _speaker_stats(ds: Dataset, center: np.ndarray) -> _SpeakerStats:
    mat = ds.matrix() - center
    speakers = ds.speakers
    f = np.empty((len(speakers), ds.dim))
    ns = np.empty(len(speakers), dtype=np.int64)
    for i, spk in enumerate(speakers):
        rows = mat[list(ds.index[spk])]
        f[i] = rows.sum(axis=0)
        ns[i] = len(rows)
    groups = tuple(
        (int(n), np.flatnonzero(ns == n)) for n in np.unique(ns)
    )
    return _SpeakerStats(f, ns, _sym(mat.T @ mat), mat.shape[0], groups)


def _marginal_loglik(u1: np.ndarray, lam: np.ndarray, stats: _SpeakerStats) -> float:
    k = lam.shape[0]
    q = u1.shape[1]
    t = u1.T @ lam
    g = _sym(t @ u1)
    b = stats.f @ t.T
    total = (
        -0.5 * stats.n_total * k * _LOG_2PI
        + 0.5 * stats.n_total * _spd_logdet(lam)
        - 0.5 * float(np.sum(lam * stats.s_phiphi))
    )
    for n, idx in stats.groups:
        p = np.eye(q) + n * g
        cf = cho_factor(p)
        logdet_p = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
        bb = b[idx]
        total += -0.5 * len(idx) * logdet_p + 0.5 * float(np.sum(bb * cho_solve(cf, bb.T).T))
    return total


def marginal_loglik(model: PldaModel, ds: Dataset) -> float:
    """Exact marginal log-likelihood of a labeled dataset under the model."""
    if ds.dim != model.dim:
        raise ValueError(f"dimension mismatch: model {model.dim}, dataset {ds.dim}")
    if not ds.labeled:
        raise ValueError("marginal likelihood needs speaker labels")
    stats = _speaker_stats(ds, model.mean)
    return _marginal_loglik(model.u1, model.lambda_prec, stats)


def train_gplda(ds: Dataset, q: int = 120, iters: int = 20, seed: int = 0) -> PldaModel:
    """Fit the model by EM with ``q`` eigenvoices for a fixed number of iterations.

    The eigenvoice matrix is initialized from a seeded standard normal
    scaled by 0.1 and the precision from the inverse global covariance;
    the mean is the global mean and is never re-estimated.  Deterministic
    given (data, q, iters, seed).
    """
    if not ds.labeled:
        raise ValueError("PLDA training needs speaker labels")
    if len(ds.speakers) < 2:
        raise ValueError("PLDA training needs at least two speakers")
    k = ds.dim
    if q < 1:
        raise ValueError("need at least one eigenvoice")
    if q > k:
        raise ValueError(f"q={q} exceeds data dimension {k}")
    if iters < 0:
        raise ValueError("iters must be nonnegative")

    mean = ds.matrix().mean(axis=0)
    stats = _speaker_stats(ds, mean)
    rng = np.random.default_rng(seed)
    u1 = 0.1 * rng.standard_normal((k, q))
    lam = _spd_inverse(stats.s_phiphi / stats.n_total, "global covariance")

    trace = [_marginal_loglik(u1, lam, stats)]
    eye_q = np.eye(q)
    for it in range(iters):
        t = u1.T @ lam
        g = _sym(t @ u1)
        b = stats.f @ t.T
        xhat = np.empty((stats.f.shape[0], q))
        r_xx = np.zeros((q, q))
        for n, idx in stats.groups:
            cf = cho_factor(eye_q + n * g)
            xhat[idx] = cho_solve(cf, b[idx].T).T
            r_xx += n * len(idx) * cho_solve(cf, eye_q)
        r_xx += (xhat * stats.ns[:, None]).T @ xhat
        r_fx = stats.f.T @ xhat
        try:
            u1 = np.linalg.solve(_sym(r_xx), r_fx.T).T
        except np.linalg.LinAlgError:
            raise ValueError(f"singular latent-moment accumulator at iteration {it}") from None
        within = (
            stats.s_phiphi - r_fx @ u1.T - u1 @ r_fx.T + u1 @ _sym(r_xx) @ u1.T
        ) / stats.n_total
        lam = _spd_inverse(_sym(within), f"within covariance at iteration {it}")
        trace.append(_marginal_loglik(u1, lam, stats))

    return PldaModel(mean, u1, lam, loglik_trace=tuple(trace))


# ---------------------------------------------------------------------------
# scoring


def _pair_llr_terms(m: PldaModel) -> tuple[np.ndarray, np.ndarray, float]:
    """Matrices (Q, P) and constant with llr = u'Qu/2 + v'Qv/2 + u'Pv + const.

    Derived by rotating the joint (same-speaker) covariance into
    sum/difference coordinates: the sum block is ``2*between + within``,
    the difference block is exactly ``within``.
    """
    a = m.sigma_total
    ab = a + m.sigma_between
    a_inv = _sym(cho_solve(cho_factor(a), np.eye(m.dim)))
    s = _sym(cho_solve(cho_factor(ab), np.eye(m.dim)))
    lam = m.lambda_prec
    q_mat = a_inv - 0.5 * (s + lam)
    p_mat = 0.5 * (lam - s)
    const = -0.5 * (_spd_logdet(ab) + _spd_logdet(m.sigma_within) - 2.0 * _spd_logdet(a))
    return q_mat, p_mat, const


def score_trial(m: PldaModel, w_enrol: np.ndarray, w_test: np.ndarray) -> float:
    """Log-likelihood ratio of same-speaker vs independent for one pair.

    Equals ``ln N([u; v]; 0, [[T, B], [B, T]]) - ln N(u; 0, T) - ln N(v; 0, T)``
    with u, v the mean-centered inputs, T the total and B the
    between-speaker covariance.  Symmetric in its arguments.
    """
    w_enrol = np.asarray(w_enrol, dtype=np.float64)
    w_test = np.asarray(w_test, dtype=np.float64)
    if w_enrol.shape != (m.dim,) or w_test.shape != (m.dim,):
        raise ValueError(f"model expects vectors of dimension {m.dim}")
    q_mat, p_mat, const = _pair_llr_terms(m)
    u = w_enrol - m.mean
    v = w_test - m.mean
    return float(0.5 * (u @ q_mat @ u + v @ q_mat @ v) + u @ (p_mat @ v) + const)


@dataclass(frozen=True)
class ScoredTrial:
    trial: Trial
    raw_llr: float
    normalized_llr: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.raw_llr):
            raise ValueError(f"non-finite raw score for trial {self.trial}")
        if self.normalized_llr is not None and not math.isfinite(self.normalized_llr):
            raise ValueError(f"non-finite normalized score for trial {self.trial}")


@dataclass(frozen=True)
class ScoreSet:
    """Trials joined with raw and (optionally) normalized LLR scores."""

    trials: tuple[ScoredTrial, ...]

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self) -> Iterator[ScoredTrial]:
        return iter(self.trials)

    @property
    def has_normalized(self) -> bool:
        return all(st.normalized_llr is not None for st in self.trials)

    def values(self, which: str = "raw") -> np.ndarray:
        if which == "raw":
            return np.array([st.raw_llr for st in self.trials])
        if which == "normalized":
            if not self.has_normalized:
                raise ValueError("score set has no normalized scores")
            return np.array([st.normalized_llr for st in self.trials])
        raise ValueError(f"unknown score kind '{which}'")

    def tar_non(self, which: str = "raw") -> tuple[np.ndarray, np.ndarray]:
        vals = self.values(which)
        labels = np.array([st.trial.is_target for st in self.trials], dtype=bool)
        return vals[labels], vals[~labels]

    def with_normalized(self, normalized: Sequence[float]) -> "ScoreSet":
        if len(normalized) != len(self.trials):
            raise ValueError("need one normalized score per trial")
        return ScoreSet(
            tuple(
                replace(st, normalized_llr=float(x))
                for st, x in zip(self.trials, normalized)
            )
        )


def score_trials(
    m: PldaModel, enrol: Dataset, test: Dataset, trials: Sequence[Trial]
) -> ScoreSet:
    """Score a trial list; per-trial results equal ``score_trial`` exactly.

    The pair-scoring matrices are computed once, so each trial costs two
    matrix-vector products over already-centered vectors.
    """
    if enrol.dim != m.dim or test.dim != m.dim:
        raise ValueError(f"model expects dimension {m.dim}")
    if not trials:
        return ScoreSet(())
    e_map = enrol.by_id()
    t_map = test.by_id()
    e_ids: dict[str, int] = {}
    t_ids: dict[str, int] = {}
    for k, tr in enumerate(trials):
        if tr.enrol_id not in e_map:
            raise ValueError(f"trial {k}: unknown enrol id '{tr.enrol_id}'")
        if tr.test_id not in t_map:
            raise ValueError(f"trial {k}: unknown test id '{tr.test_id}'")
        e_ids.setdefault(tr.enrol_id, len(e_ids))
        t_ids.setdefault(tr.test_id, len(t_ids))
    q_mat, p_mat, const = _pair_llr_terms(m)
    u = np.stack([e_map[i].values for i in e_ids]) - m.mean
    v = np.stack([t_map[i].values for i in t_ids]) - m.mean
    qu = 0.5 * np.einsum("ij,ij->i", u @ q_mat, u)
    qv = 0.5 * np.einsum("ij,ij->i", v @ q_mat, v)
    pv = v @ p_mat
    scored = []
    for tr in trials:
        ei = e_ids[tr.enrol_id]
        ti = t_ids[tr.test_id]
        llr = float(qu[ei] + qv[ti] + u[ei] @ pv[ti] + const)
        scored.append(ScoredTrial(tr, llr))
    return ScoreSet(tuple(scored))


# ---------------------------------------------------------------------------
# persistence


def save_plda(m: PldaModel, path: str | Path) -> None:
    parts = [
        PLDA_MAGIC,
        struct.pack("<II", m.dim, m.n_eigenvoices),
        np.ascontiguousarray(m.mean, dtype="<f8").tobytes(),
        np.ascontiguousarray(m.u1, dtype="<f8").tobytes(),
        np.ascontiguousarray(m.lambda_prec, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def load_plda(path: str | Path) -> PldaModel:
    data = Path(path).read_bytes()
    if data[: len(PLDA_MAGIC)] != PLDA_MAGIC:
        raise ValueError(f"{path}: bad magic, not a PLDA model file")
    off = len(PLDA_MAGIC)
    k, q = struct.unpack_from("<II", data, off)
    off += 8
    expected = off + 8 * (k + k * q + k * k)
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    mean = np.frombuffer(data, dtype="<f8", count=k, offset=off)
    off += 8 * k
    u1 = np.frombuffer(data, dtype="<f8", count=k * q, offset=off).reshape(k, q)
    off += 8 * k * q
    lam = np.frombuffer(data, dtype="<f8", count=k * k, offset=off).reshape(k, k)
    return PldaModel(mean, u1, lam)


def save_loglik_trace(m: PldaModel, path: str | Path) -> None:
    """Write the training log-likelihood trace as a two-column CSV."""
    if m.loglik_trace is None:
        raise ValueError("model carries no log-likelihood trace")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iteration", "loglik"])
        for i, ll in enumerate(m.loglik_trace):
            w.writerow([i, repr(ll)])


# ---------------------------------------------------------------------------
# score-set CSV


def write_scores(scores: ScoreSet, path: str | Path) -> None:
    """CSV columns: enrol,test,label,raw_llr,norm_llr (norm blank if absent)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["enrol", "test", "label", "raw_llr", "norm_llr"])
        for st in scores.trials:
            w.writerow(
                [
                    st.trial.enrol_id,
                    st.trial.test_id,
                    "target" if st.trial.is_target else "nontarget",
                    repr(st.raw_llr),
                    "" if st.normalized_llr is None else repr(st.normalized_llr),
                ]
            )


def read_scores(path: str | Path) -> ScoreSet:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["enrol", "test", "label", "raw_llr", "norm_llr"]:
            raise ValueError(f"{path}: missing or malformed score header")
        scored = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"{path}: line {lineno}: expected 5 fields")
            if row[2] not in ("target", "nontarget"):
                raise ValueError(f"{path}: line {lineno}: unknown label '{row[2]}'")
            try:
                raw = float(row[3])
                norm = float(row[4]) if row[4] else None
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed score") from None
            scored.append(ScoredTrial(Trial(row[0], row[1], row[2] == "target"), raw, norm))
    return ScoreSet(tuple(scored))
