"""Detection metrics: equal error rate and minimum detection cost.

Threshold semantics: a trial is accepted as "target" when its score is
at least the threshold; candidate thresholds are the distinct score
values plus both infinities, so ties are evaluated at the tied value.
Each threshold yields an operating point (false-alarm rate, miss rate).

EER is read off the lower convex hull of the operating points in the
(FA, MISS) plane: the hull is the set of error-rate pairs achievable by
interpolating between thresholds, and its crossing with FA == MISS is
the smallest achievable equal error rate.  minDCF is the minimum of the
weighted detection cost over the operating points themselves.

Both metrics depend only on the ordering of scores, so any strictly
increasing transform of the scores leaves them unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .gplda import ScoreSet


@dataclass(frozen=True)
class DcfParams:
    """Detection cost weights; defaults match telephone-speech evaluations."""

    c_miss: float = 10.0
    c_fa: float = 1.0
    p_target: float = 0.01

    def __post_init__(self) -> None:
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise ValueError("costs must be positive")
        if not 0.0 < self.p_target < 1.0:
            raise ValueError("p_target must be in (0, 1)")

    @property
    def floor(self) -> float:
        """Cost of the better degenerate policy (accept all / reject all)."""
        return min(self.c_miss * self.p_target, self.c_fa * (1.0 - self.p_target))


class DcfResult(NamedTuple):
    min_dcf: float
    min_dcf_normalized: float


def _tar_non(scores: ScoreSet, which: str) -> tuple[np.ndarray, np.ndarray]:
    tar, non = scores.tar_non(which)
    if tar.size == 0 or non.size == 0:
        raise ValueError("score set needs at least one target and one nontarget trial")
    return tar, non


def _staircase(tar: np.ndarray, non: np.ndarray) -> list[tuple[float, float]]:
    """Operating points (FA, MISS) for every candidate threshold, ascending."""
    thresholds = np.unique(np.concatenate([tar, non]))
    tar_sorted = np.sort(tar)
    non_sorted = np.sort(non)
    fa = (non.size - np.searchsorted(non_sorted, thresholds, side="left")) / non.size
    miss = np.searchsorted(tar_sorted, thresholds, side="left") / tar.size
    points = [(1.0, 0.0)]
    points.extend(zip(fa.tolist(), miss.tolist()))
    points.append((0.0, 1.0))
    return points


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_hull(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    hull: list[tuple[float, float]] = []
    for p in sorted(set(points)):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def _hull_eer(points: Sequence[tuple[float, float]]) -> float:
    hull = _lower_hull(points)
    for a, b in zip(hull, hull[1:]):
        da = a[1] - a[0]
        db = b[1] - b[0]
        if da >= 0.0 and db <= 0.0:
            if da == 0.0:
                return a[0]
            t = da / (da - db)
            return a[0] + t * (b[0] - a[0])
    # endpoints (1, 0) and (0, 1) guarantee a crossing; unreachable
    raise AssertionError("no diagonal crossing on DET hull")


def eer(scores: ScoreSet, which: str = "raw") -> float:
    """Equal error rate of the chosen score column, in [0, 1]."""
    tar, non = _tar_non(scores, which)
    return _hull_eer(_staircase(tar, non))


def min_dcf(scores: ScoreSet, params: DcfParams = DcfParams(), which: str = "raw") -> DcfResult:
    """Minimum detection cost over all thresholds, raw and normalized.

    The normalized value divides by the better degenerate policy's cost,
    so 1.0 means the scores are useless for this operating point.
    """
    tar, non = _tar_non(scores, which)
    costs = [
        params.c_miss * params.p_target * miss + params.c_fa * (1.0 - params.p_target) * fa
        for fa, miss in _staircase(tar, non)
    ]
    value = min(costs)
    return DcfResult(value, value / params.floor)


def det_points(scores: ScoreSet, which: str = "raw") -> list[tuple[float, float]]:
    """DET staircase: (FA, MISS) per threshold, FA non-increasing.

    Consecutive duplicate points are collapsed.
    """
    tar, non = _tar_non(scores, which)
    out: list[tuple[float, float]] = []
    for p in _staircase(tar, non):
        if not out or out[-1] != p:
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# report CSV


@dataclass(frozen=True)
class MetricReportRow:
    condition: str
    system: str
    eer: float
    min_dcf: float
    min_dcf_normalized: float
    n_target: int
    n_nontarget: int


REPORT_COLUMNS = [
    "condition",
    "system",
    "eer",
    "min_dcf",
    "min_dcf_normalized",
    "n_target",
    "n_nontarget",
]


def evaluate(
    scores: ScoreSet,
    condition: str,
    system: str,
    params: DcfParams = DcfParams(),
    which: str = "raw",
) -> MetricReportRow:
    """Bundle EER and minDCF of one score set into a report row."""
    tar, non = _tar_non(scores, which)
    dcf = min_dcf(scores, params, which)
    return MetricReportRow(
        condition=condition,
        system=system,
        eer=eer(scores, which),
        min_dcf=dcf.min_dcf,
        min_dcf_normalized=dcf.min_dcf_normalized,
        n_target=int(tar.size),
        n_nontarget=int(non.size),
    )


def write_metric_report(rows: Iterable[MetricReportRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow(
                [
                    r.condition,
                    r.system,
                    repr(r.eer),
                    repr(r.min_dcf),
                    repr(r.min_dcf_normalized),
                    r.n_target,
                    r.n_nontarget,
                ]
            )
