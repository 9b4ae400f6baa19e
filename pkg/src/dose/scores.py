"""Score vectors: per-sample scalar scores under a named scoring rule.

Each method has a fixed orientation.  ``higher_is_in`` means larger scores
look more in-distribution; the typicality test is the one method oriented
the other way.  ``oriented()`` returns scores flipped into higher_is_in
form so downstream metrics never branch on orientation.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyScores, NonFiniteValue, OrientationMismatch

HIGHER_IS_IN = "higher_is_in"
LOWER_IS_IN = "lower_is_in"

METHOD_ORIENTATIONS = {
    "likelihood": HIGHER_IS_IN,
    "tt": LOWER_IS_IN,
    "waic": HIGHER_IS_IN,
    "llr": HIGHER_IS_IN,
    "dose_kde": HIGHER_IS_IN,
    "dose_svm": HIGHER_IS_IN,
}


@dataclass(frozen=True)
class ScoreVector:
    method: str
    sample_ids: tuple[str, ...]
    scores: np.ndarray = field(repr=False)
    orientation: str = HIGHER_IS_IN

    def __post_init__(self):
        if self.method not in METHOD_ORIENTATIONS:
            raise OrientationMismatch(f"unknown method {self.method!r}")
        expected = METHOD_ORIENTATIONS[self.method]
        if self.orientation != expected:
            raise OrientationMismatch(
                f"method {self.method!r} is {expected}, got {self.orientation!r}"
            )
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.shape[0] != len(self.sample_ids):
            raise DimensionMismatch("scores must be 1-D with one entry per sample id")
        bad = np.argwhere(~np.isfinite(scores))
        if bad.size:
            raise NonFiniteValue(self.sample_ids[bad[0, 0]], self.method)
        scores = scores.copy()
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.sample_ids)

    def oriented(self) -> np.ndarray:
        """Scores with higher = more in-distribution, whatever the method."""
        if self.orientation == HIGHER_IS_IN:
            return self.scores
        return -self.scores

    def with_scores(self, scores: np.ndarray) -> "ScoreVector":
        return ScoreVector(self.method, self.sample_ids, scores, self.orientation)


def make_scores(method: str, sample_ids, scores) -> ScoreVector:
    return ScoreVector(method, tuple(sample_ids), scores, METHOD_ORIENTATIONS[method])


def scores_to_csv_bytes(sv: ScoreVector) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "score"])
    for sid, score in zip(sv.sample_ids, sv.scores):
        writer.writerow([sid, repr(float(score))])
    return buf.getvalue().encode("utf-8")


def write_scores(sv: ScoreVector, path: str | Path) -> Path:
    """Write ``<path>`` (CSV) and a ``<path>.meta.json`` sidecar."""
    path = Path(path)
    path.write_bytes(scores_to_csv_bytes(sv))
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(
        json.dumps(
            {"method": sv.method, "orientation": sv.orientation},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return path


def read_scores(path: str | Path) -> ScoreVector:
    path = Path(path)
    sidecar = path.with_name(path.name + ".meta.json")
    if not sidecar.exists():
        raise EmptyScores(f"score sidecar {sidecar} does not exist")
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "score"]:
            raise EmptyScores(f"{path} is not a score CSV")
        sample_ids = []
        values = []
        for line in reader:
            if not line:
                continue
            sample_ids.append(line[0])
            values.append(float(line[1]))
    if not sample_ids:
        raise EmptyScores(f"{path} holds no scores")
    return ScoreVector(
        meta["method"], tuple(sample_ids), np.array(values), meta["orientation"]
    )
