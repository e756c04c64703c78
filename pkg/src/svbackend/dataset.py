"""Core data types, i-vector file IO, and the synthetic i-vector generator.

The generator draws i-vectors from a linear-Gaussian model: a shared
low-rank speaker subspace, isotropic per-session channel noise, and a
fixed mean offset between the out-domain and in-domain populations.
Short utterances are simulated by adding isotropic noise whose standard
deviation grows as the active-speech duration shrinks.

All types are immutable after construction (arrays are stored as
read-only copies) and safe to share across threads; every randomized
operation is a pure function of its inputs and an explicit seed.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence

import numpy as np

IVEC_MAGIC = b"IVEC1"

#: Default i-vector dimension of a full-scale telephone-speech system.
DEFAULT_IVECTOR_DIM = 500


class Domain(Enum):
    """Which population an utterance belongs to.

    In-domain matches the evaluation corpus; out-domain matches the
    (mismatched) development corpus.
    """

    IN_DOMAIN = "in"
    OUT_DOMAIN = "out"


@dataclass(frozen=True, eq=False)
class IVector:
    """A single utterance embedding plus its metadata.

    ``speaker`` may be None for unlabeled cohort material.  ``values``
    is stored as a read-only float64 copy of dimension D.
    """

    id: str
    speaker: str | None
    domain: Domain
    duration_sec: float
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"ivector '{self.id}': values must be a non-empty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"ivector '{self.id}': values contain non-finite entries")
        if not self.duration_sec > 0:
            raise ValueError(f"ivector '{self.id}': duration_sec must be positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IVector):
            return NotImplemented
        return (
            self.id == other.id
            and self.speaker == other.speaker
            and self.domain == other.domain
            and self.duration_sec == other.duration_sec
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of same-dimension i-vectors.

    Utterance ids must be unique.  ``index`` maps each speaker label to
    the positions of that speaker's sessions, in dataset order;
    unlabeled items are not indexed.
    """

    items: tuple[IVector, ...]
    dim: int | None = None
    index: Mapping[str, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        dim = self.dim
        if items:
            dims = {iv.dim for iv in items}
            if len(dims) != 1:
                raise ValueError(f"mixed i-vector dimensions in dataset: {sorted(dims)}")
            (item_dim,) = dims
            if dim is None:
                dim = item_dim
            elif dim != item_dim:
                raise ValueError(f"dataset dim {dim} does not match item dimension {item_dim}")
        elif dim is None:
            raise ValueError("empty dataset needs an explicit dim")
        object.__setattr__(self, "dim", int(dim))

        seen: set[str] = set()
        index: dict[str, list[int]] = {}
        for pos, iv in enumerate(items):
            if iv.id in seen:
                raise ValueError(f"duplicate utterance id '{iv.id}'")
            seen.add(iv.id)
            if iv.speaker is not None:
                index.setdefault(iv.speaker, []).append(pos)
        frozen = {spk: tuple(ps) for spk, ps in index.items()}
        object.__setattr__(self, "index", MappingProxyType(frozen))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[IVector]:
        return iter(self.items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.dim == other.dim and self.items == other.items

    @property
    def speakers(self) -> tuple[str, ...]:
        """Speaker labels in sorted order."""
        return tuple(sorted(self.index))

    @property
    def labeled(self) -> bool:
        return all(iv.speaker is not None for iv in self.items)

    def matrix(self) -> np.ndarray:
        """All values stacked as an (N, D) float64 matrix."""
        if not self.items:
            return np.empty((0, self.dim))
        return np.stack([iv.values for iv in self.items])

    def by_id(self) -> dict[str, IVector]:
        return {iv.id: iv for iv in self.items}

    def with_values(self, values: np.ndarray) -> "Dataset":
        """Same metadata, new values; used by transforms (possibly new dim)."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != len(self.items):
            raise ValueError(f"expected a ({len(self.items)}, dim) matrix")
        items = tuple(replace(iv, values=row) for iv, row in zip(self.items, values))
        return Dataset(items, dim=values.shape[1])

    def subset(self, positions: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.items[p] for p in positions), dim=self.dim)


@dataclass(frozen=True)
class DurationNoiseModel:
    """Isotropic noise standing in for short-utterance phonetic variability.

    Per-coordinate standard deviation at duration d is
    ``sigma0 * (duration_ref_sec / d) ** exponent``, so the noise level
    equals sigma0 at the reference duration and grows as utterances
    shrink.  The default exponent 0.5 gives an inverse-square-root law.
    """

    sigma0: float
    duration_ref_sec: float
    exponent: float = 0.5

    def __post_init__(self) -> None:
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be nonnegative")
        if not self.duration_ref_sec > 0:
            raise ValueError("duration_ref_sec must be positive")

    def sigma(self, duration_sec: float) -> float:
        if not duration_sec > 0:
            raise ValueError("duration must be positive")
        return self.sigma0 * (self.duration_ref_sec / duration_sec) ** self.exponent


@dataclass(frozen=True, eq=False)
class GeneratorConfig:
    """Knobs of the synthetic two-domain i-vector generator.

    ``domain_offset`` (length ``dim``; None means zero) is the mean
    shift of the out-domain population relative to the in-domain one.
    ``out_channel_scale`` optionally gives the out-domain population its
    own session-noise level (None reuses ``channel_scale``), modeling
    corpora whose recording conditions differ in spread and not just
    location.  ``subspace_seed`` controls the ground-truth speaker
    subspace only; leaving it None ties it to ``seed``.  Giving several
    configs the same ``subspace_seed`` but different ``seed`` draws
    fresh speakers from one shared population, which is how evaluation
    and cohort sets are produced.
    """

    dim: int = DEFAULT_IVECTOR_DIM
    n_speakers: int = 150
    sessions_per_speaker: int = 10
    eigenvoice_dim: int = 50
    speaker_scale: float = 1.0
    channel_scale: float = 1.0
    domain_offset: np.ndarray | None = None
    out_channel_scale: float | None = None
    duration_ref_sec: float = 120.0
    duration_noise_scale: float = 0.0
    duration_noise_exponent: float = 0.5
    seed: int = 0
    subspace_seed: int | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("invalid config: dim must be at least 1")
        if self.n_speakers < 1:
            raise ValueError("invalid config: need at least one speaker per domain")
        if self.sessions_per_speaker < 1:
            raise ValueError("invalid config: need at least one session per speaker")
        if not 1 <= self.eigenvoice_dim <= self.dim:
            raise ValueError("invalid config: eigenvoice_dim must be in [1, dim]")
        if self.speaker_scale < 0 or self.channel_scale < 0:
            raise ValueError("invalid config: scales must be nonnegative")
        if self.out_channel_scale is not None and self.out_channel_scale < 0:
            raise ValueError("invalid config: scales must be nonnegative")
        if not self.duration_ref_sec > 0:
            raise ValueError("invalid config: duration_ref_sec must be positive")
        if self.duration_noise_scale < 0:
            raise ValueError("invalid config: duration_noise_scale must be nonnegative")
        offset = self.domain_offset
        if offset is None:
            offset = np.zeros(self.dim)
        offset = np.array(offset, dtype=np.float64, copy=True)
        if offset.shape != (self.dim,):
            raise ValueError(f"invalid config: domain_offset must have length {self.dim}")
        if not np.all(np.isfinite(offset)):
            raise ValueError("invalid config: domain_offset has non-finite entries")
        offset.flags.writeable = False
        object.__setattr__(self, "domain_offset", offset)

    @property
    def noise_model(self) -> DurationNoiseModel:
        return DurationNoiseModel(
            self.duration_noise_scale, self.duration_ref_sec, self.duration_noise_exponent
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneratorConfig):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            if f == "domain_offset"
            else getattr(self, f) == getattr(other, f)
            for f in self.__dataclass_fields__
        )


def _seed_streams(cfg: GeneratorConfig) -> tuple[np.random.Generator, np.random.Generator]:
    in_seq, out_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    return np.random.default_rng(in_seq), np.random.default_rng(out_seq)


def ground_truth_subspace(cfg: GeneratorConfig) -> np.ndarray:
    """Orthonormal (dim, eigenvoice_dim) basis of the generator's speaker subspace.

    Deterministic in ``subspace_seed`` (falling back to ``seed``), so the
    population covariance ``speaker_scale**2 * U @ U.T + channel_scale**2 * I``
    can be reconstructed exactly for a given config.
    """
    entropy = cfg.seed if cfg.subspace_seed is None else cfg.subspace_seed
    rng = np.random.default_rng(np.random.SeedSequence((entropy, 0xB5)))
    g = rng.standard_normal((cfg.dim, cfg.eigenvoice_dim))
    q, r = np.linalg.qr(g)
    # fix signs so the basis is stable under QR implementation details
    q = q * np.sign(np.diag(r))
    return q


def _synth_domain(
    cfg: GeneratorConfig,
    u: np.ndarray,
    domain: Domain,
    mean: np.ndarray,
    channel_scale: float,
    rng: np.random.Generator,
    prefix: str,
) -> Dataset:
    items = []
    for si in range(cfg.n_speakers):
        speaker = f"{prefix}-s{si:04d}"
        x = rng.standard_normal(cfg.eigenvoice_dim)
        base = mean + cfg.speaker_scale * (u @ x)
        eps = channel_scale * rng.standard_normal((cfg.sessions_per_speaker, cfg.dim))
        for r in range(cfg.sessions_per_speaker):
            items.append(
                IVector(
                    id=f"{speaker}-u{r:02d}",
                    speaker=speaker,
                    domain=domain,
                    duration_sec=cfg.duration_ref_sec,
                    values=base + eps[r],
                )
            )
    return Dataset(tuple(items), dim=cfg.dim)


def synth_dataset(cfg: GeneratorConfig) -> tuple[Dataset, Dataset]:
    """Draw one in-domain and one out-domain dataset from the generator.

    Every i-vector is ``m_domain + speaker_scale * U @ x_s + eps_r`` with
    per-speaker ``x_s ~ N(0, I)``, per-session ``eps_r ~ N(0, c**2 I)``
    (``c`` is the domain's channel scale), the in-domain mean at zero
    and the out-domain mean at ``domain_offset``.  Deterministic given
    the config; all items carry ``duration_ref_sec``.
    """
    u = ground_truth_subspace(cfg)
    in_rng, out_rng = _seed_streams(cfg)
    out_channel = (
        cfg.channel_scale if cfg.out_channel_scale is None else cfg.out_channel_scale
    )
    in_ds = _synth_domain(
        cfg, u, Domain.IN_DOMAIN, np.zeros(cfg.dim), cfg.channel_scale, in_rng, "in"
    )
    out_ds = _synth_domain(
        cfg, u, Domain.OUT_DOMAIN, np.asarray(cfg.domain_offset), out_channel, out_rng, "out"
    )
    return in_ds, out_ds


def apply_duration_noise(
    ds: Dataset, target_duration_sec: float, noise: DurationNoiseModel, seed: int
) -> Dataset:
    """Simulate truncating every utterance to ``target_duration_sec``.

    Adds i.i.d. zero-mean Gaussian noise with the model's per-coordinate
    sigma at the target duration and rewrites the duration metadata.
    With ``sigma0 == 0`` the values are returned bit-identical.
    """
    if not target_duration_sec > 0:
        raise ValueError("target duration must be positive")
    sigma = noise.sigma(target_duration_sec)
    if sigma == 0.0:
        items = tuple(replace(iv, duration_sec=target_duration_sec) for iv in ds.items)
        return Dataset(items, dim=ds.dim)
    rng = np.random.default_rng(seed)
    offsets = sigma * rng.standard_normal((len(ds), ds.dim))
    items = tuple(
        replace(iv, duration_sec=target_duration_sec, values=iv.values + offsets[i])
        for i, iv in enumerate(ds.items)
    )
    return Dataset(items, dim=ds.dim)


# ---------------------------------------------------------------------------
# file formats


def save_ivectors(ds: Dataset, path: str | Path, format: str = "binary") -> None:
    """Write a dataset to ``path`` in ``binary`` or ``csv`` format.

    The binary format round-trips bit-exactly; CSV uses shortest
    round-trip decimal rendering (also exact for float64).
    """
    if format == "binary":
        _save_binary(ds, Path(path))
    elif format == "csv":
        _save_csv(ds, Path(path))
    else:
        raise ValueError(f"unknown i-vector format '{format}'")


def load_ivectors(path: str | Path, format: str = "binary") -> Dataset:
    if format == "binary":
        return _load_binary(Path(path))
    if format == "csv":
        return _load_csv(Path(path))
    raise ValueError(f"unknown i-vector format '{format}'")


def _save_binary(ds: Dataset, path: Path) -> None:
    parts = [IVEC_MAGIC, struct.pack("<IQ", ds.dim, len(ds))]
    for iv in ds.items:
        for text in (iv.id, iv.speaker or "", iv.domain.value):
            raw = text.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)
        parts.append(struct.pack("<d", iv.duration_sec))
        parts.append(np.ascontiguousarray(iv.values, dtype="<f8").tobytes())
    path.write_bytes(b"".join(parts))


def _load_binary(path: Path) -> Dataset:
    data = path.read_bytes()
    if data[: len(IVEC_MAGIC)] != IVEC_MAGIC:
        raise ValueError(f"{path}: bad magic, not an i-vector file")
    off = len(IVEC_MAGIC)

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise ValueError(f"{path}: truncated {what}")
        chunk = data[off : off + n]
        off += n
        return chunk

    dim, count = struct.unpack("<IQ", take(12, "header"))
    if dim < 1:
        raise ValueError(f"{path}: header dimension must be positive")
    items = []
    for rec in range(count):
        fields = []
        for name in ("id", "speaker", "domain"):
            (n,) = struct.unpack("<I", take(4, f"record {rec} {name} length"))
            fields.append(take(n, f"record {rec} {name}").decode("utf-8"))
        (duration,) = struct.unpack("<d", take(8, f"record {rec} duration"))
        values = np.frombuffer(take(8 * dim, f"record {rec} values"), dtype="<f8")
        try:
            domain = Domain(fields[2])
        except ValueError:
            raise ValueError(f"{path}: record {rec}: unknown domain '{fields[2]}'") from None
        items.append(IVector(fields[0], fields[1] or None, domain, duration, values))
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes after record {count - 1}")
    return Dataset(tuple(items), dim=dim)


_CSV_FIXED_COLUMNS = ["id", "speaker", "domain", "duration"]


def _save_csv(ds: Dataset, path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(_CSV_FIXED_COLUMNS + [f"v{i}" for i in range(ds.dim)])
        for iv in ds.items:
            w.writerow(
                [iv.id, iv.speaker or "", iv.domain.value, repr(iv.duration_sec)]
                + [repr(x) for x in iv.values.tolist()]
            )


def _load_csv(path: Path) -> Dataset:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[:4] != _CSV_FIXED_COLUMNS:
            raise ValueError(f"{path}: missing or malformed header")
        dim = len(header) - 4
        if dim < 1:
            raise ValueError(f"{path}: header carries no value columns")
        items = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + dim:
                raise ValueError(
                    f"{path}: line {lineno}: expected {4 + dim} fields, got {len(row)}"
                    " (dimension mismatch with header)"
                )
            try:
                domain = Domain(row[2])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: unknown domain '{row[2]}'") from None
            try:
                duration = float(row[3])
                values = np.array([float(x) for x in row[4:]])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed number") from None
            items.append(IVector(row[0], row[1] or None, domain, duration, values))
    return Dataset(tuple(items), dim=dim)


@dataclass(frozen=True)
class Trial:
    """One verification trial: an enrolment/test utterance pair and its truth."""

    enrol_id: str
    test_id: str
    is_target: bool


_TRIAL_LABELS = {"target": True, "nontarget": False}


def load_trials(path: str | Path) -> list[Trial]:
    """Parse a trial list of lines ``enrol test target|nontarget``."""
    trials = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 3:
            raise ValueError(
                f"{path}: line {lineno}: expected 'enrol test target|nontarget'"
            )
        if tokens[2] not in _TRIAL_LABELS:
            raise ValueError(f"{path}: line {lineno}: unknown label '{tokens[2]}'")
        trials.append(Trial(tokens[0], tokens[1], _TRIAL_LABELS[tokens[2]]))
    return trials


def save_trials(trials: Sequence[Trial], path: str | Path) -> None:
    lines = [
        f"{t.enrol_id} {t.test_id} {'target' if t.is_target else 'nontarget'}" for t in trials
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
