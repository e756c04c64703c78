from __future__ import annotations

import numpy as np
import pytest

from svbackend.dataset import Dataset, Domain, IVector, Trial
from svbackend.gplda import ScoredTrial, ScoreSet


def make_dataset(
    values: np.ndarray,
    speakers: list[str | None] | None = None,
    domain: Domain = Domain.IN_DOMAIN,
    duration: float = 120.0,
    prefix: str = "utt",
) -> Dataset:
    """Wrap an (N, D) matrix as a dataset with generated ids."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    n = values.shape[0]
    if speakers is None:
        speakers = [f"spk{i:03d}" for i in range(n)]
    items = tuple(
        IVector(f"{prefix}{i:04d}", speakers[i], domain, duration, values[i])
        for i in range(n)
    )
    return Dataset(items, dim=values.shape[1])


def make_scoreset(tar: list[float], non: list[float]) -> ScoreSet:
    trials = [
        ScoredTrial(Trial(f"e-t{i}", f"t-t{i}", True), float(s)) for i, s in enumerate(tar)
    ]
    trials += [
        ScoredTrial(Trial(f"e-n{i}", f"t-n{i}", False), float(s)) for i, s in enumerate(non)
    ]
    return ScoreSet(tuple(trials))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
