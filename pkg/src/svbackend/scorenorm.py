"""Symmetric score normalization (S-norm) against an impostor cohort.

Each trial score s is standardized twice, once against the enrolment
side's cohort scores and once against the test side's, and the two are
averaged:

    s' = ((s - mu_e) / sigma_e + (s - mu_t) / sigma_t) / 2

Cohort statistics use the population (1/N) standard deviation.  Cohort
i-vectors must already live in the same compensated space as the
evaluation data; a matched-length cohort is produced by running the
duration-noise model over a raw cohort before re-applying the
compensation chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataset import Dataset, DurationNoiseModel, apply_duration_noise
from .gplda import PldaModel, ScoreSet, _pair_llr_terms


@dataclass(frozen=True)
class Cohort:
    """Impostor utterances used only for score normalization."""

    vectors: Dataset
    label: str

    def __post_init__(self) -> None:
        if len(self.vectors) == 0:
            raise ValueError("cohort must be non-empty")


def cohort_score_matrix(m: PldaModel, ds: Dataset, cohort: Cohort) -> np.ndarray:
    """LLR of every dataset item (rows) against every cohort item (columns)."""
    if ds.dim != m.dim or cohort.vectors.dim != m.dim:
        raise ValueError(f"model expects dimension {m.dim}")
    q_mat, p_mat, const = _pair_llr_terms(m)
    u = ds.matrix() - m.mean
    c = cohort.vectors.matrix() - m.mean
    qu = 0.5 * np.einsum("ij,ij->i", u @ q_mat, u)
    qc = 0.5 * np.einsum("ij,ij->i", c @ q_mat, c)
    return qu[:, None] + qc[None, :] + u @ (p_mat @ c.T) + const


def snorm_from_cohort_scores(
    scores: ScoreSet,
    enrol_cohort: Mapping[str, np.ndarray],
    test_cohort: Mapping[str, np.ndarray],
) -> ScoreSet:
    """Apply the S-norm formula given per-utterance cohort score arrays.

    Invariant under a shared positive affine map of raw and cohort
    scores.  Raises when a side's cohort scores have zero variance.
    """
    stats: dict[tuple[str, str], tuple[float, float]] = {}
    for side, table in (("enrol", enrol_cohort), ("test", test_cohort)):
        for utt, arr in table.items():
            arr = np.asarray(arr, dtype=np.float64)
            sigma = float(arr.std())
            if sigma == 0.0:
                raise ValueError(
                    f"degenerate cohort: zero score variance on {side} side for '{utt}'"
                )
            stats[(side, utt)] = (float(arr.mean()), sigma)
    normalized = []
    for st in scores.trials:
        mu_e, sd_e = stats[("enrol", st.trial.enrol_id)]
        mu_t, sd_t = stats[("test", st.trial.test_id)]
        normalized.append(0.5 * ((st.raw_llr - mu_e) / sd_e + (st.raw_llr - mu_t) / sd_t))
    return scores.with_normalized(normalized)


def snorm(
    m: PldaModel,
    scores: ScoreSet,
    enrol: Dataset,
    test: Dataset,
    cohort: Cohort,
) -> ScoreSet:
    """Fill ``normalized_llr`` for every trial; raw scores are untouched."""
    e_needed = {st.trial.enrol_id for st in scores.trials}
    t_needed = {st.trial.test_id for st in scores.trials}
    e_map = enrol.by_id()
    t_map = test.by_id()
    for utt in sorted(e_needed):
        if utt not in e_map:
            raise ValueError(f"unknown enrol id '{utt}'")
    for utt in sorted(t_needed):
        if utt not in t_map:
            raise ValueError(f"unknown test id '{utt}'")

    def side_scores(ds: Dataset, needed: set[str]) -> dict[str, np.ndarray]:
        items = [iv for iv in ds.items if iv.id in needed]
        sub = Dataset(tuple(items), dim=ds.dim)
        mat = cohort_score_matrix(m, sub, cohort)
        return {iv.id: mat[i] for i, iv in enumerate(items)}

    return snorm_from_cohort_scores(
        scores, side_scores(enrol, e_needed), side_scores(test, t_needed)
    )


def matched_length_cohort(
    base: Cohort, duration_sec: float, noise: DurationNoiseModel, seed: int
) -> Cohort:
    """Truncate a raw cohort to the evaluation duration via the noise model.

    The result still needs the compensation chain applied before use;
    the label records the target duration.
    """
    vectors = apply_duration_noise(base.vectors, duration_sec, noise, seed)
    return Cohort(vectors, label=f"{base.label}@{duration_sec:g}s")
