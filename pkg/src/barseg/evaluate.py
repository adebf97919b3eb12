"""Boundary hit-rate evaluation and annotation/downbeat alignment.

Estimated and reference boundary times are matched one-to-one by maximum
bipartite matching within a tolerance window; precision, recall, and
F-measure are reported per tolerance (0.5s strict, 3s lenient).
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

DEFAULT_TOLERANCES = (0.5, 3.0)


@dataclass
class BoundarySet:
    """Strictly increasing boundary times in seconds."""

    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.ndim != 1:
            raise ValueError("BoundarySet expects a 1-D array of times")
        if len(self.times) and self.times[0] < 0:
            raise ValueError("boundary times must be nonnegative")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("boundary times must be strictly increasing")

    def __len__(self):
        return len(self.times)


@dataclass
class ToleranceResult:
    tolerance: float
    precision: float
    recall: float
    f_measure: float
    n_est: int
    n_ref: int
    n_matched: int
    matched_pairs: list

    def to_dict(self):
        return {
            "tol": self.tolerance,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "n_est": self.n_est,
            "n_ref": self.n_ref,
            "n_matched": self.n_matched,
        }


@dataclass
class EvalReport:
    results: dict  # tolerance -> ToleranceResult

    def to_dict(self):
        return {format(tol, "g"): res.to_dict() for tol, res in sorted(self.results.items())}


def hit_rate(est, ref, tol):
    """Precision/recall/F of est vs ref boundaries at a tolerance.

    Matching is maximum-cardinality one-to-one (bipartite), not greedy:
    each estimated boundary can claim at most one reference and vice
    versa. Empty inputs yield 0 with a warning.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    est_t = np.asarray(est.times if isinstance(est, BoundarySet) else est, dtype=np.float64)
    ref_t = np.asarray(ref.times if isinstance(ref, BoundarySet) else ref, dtype=np.float64)
    if len(est_t) == 0 or len(ref_t) == 0:
        warnings.warn("hit_rate called with an empty boundary set; reporting zeros")
        return ToleranceResult(tol, 0.0, 0.0, 0.0, len(est_t), len(ref_t), 0, [])

    feasible = np.abs(est_t[:, None] - ref_t[None, :]) <= tol
    graph = scipy.sparse.csr_matrix(feasible.astype(np.int8))
    match = scipy.sparse.csgraph.maximum_bipartite_matching(graph, perm_type="column")
    pairs = [(i, int(j)) for i, j in enumerate(match) if j >= 0]
    n_matched = len(pairs)
    precision = n_matched / len(est_t)
    recall = n_matched / len(ref_t)
    f_measure = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ToleranceResult(tol, precision, recall, f_measure, len(est_t), len(ref_t), n_matched, pairs)


def evaluate_boundaries(est, ref, tolerances=DEFAULT_TOLERANCES):
    """EvalReport over several tolerances."""
    return EvalReport({tol: hit_rate(est, ref, tol) for tol in tolerances})


def align_to_downbeats(annot, grid):
    """Snap each annotated time to the nearest downbeat (ties go earlier).

    Duplicate snapped times are collapsed.
    """
    downbeats = grid.downbeats
    snapped = []
    for t in annot.times:
        idx = np.searchsorted(downbeats, t)
        candidates = []
        if idx > 0:
            candidates.append(downbeats[idx - 1])
        if idx < len(downbeats):
            candidates.append(downbeats[idx])
        # Earlier candidate first, so a strict '<' keeps it on a tie.
        nearest = candidates[0]
        for c in candidates[1:]:
            if abs(c - t) < abs(nearest - t):
                nearest = c
        snapped.append(nearest)
    unique = np.unique(np.asarray(snapped))
    return BoundarySet(unique)


def load_annotations(path, dedup_tol=1e-6):
    """Parse a segment annotation file into a boundary set.

    Accepted line forms: "start<TAB>end<TAB>label" or "time<TAB>label"
    (any whitespace separator works). Labels are parsed but ignored; the
    boundary set is the union of all start/end times, deduplicated.
    """
    times = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            try:
                if len(fields) >= 2 and _is_float(fields[1]):
                    times.extend((float(fields[0]), float(fields[1])))
                elif len(fields) >= 1:
                    times.append(float(fields[0]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparseable annotation line: {line!r}") from exc
    if not times:
        raise ValueError(f"{path}: no annotated times found")
    times = np.sort(np.asarray(times, dtype=np.float64))
    keep = [times[0]]
    for t in times[1:]:
        if t - keep[-1] > dedup_tol:
            keep.append(t)
    return BoundarySet(np.asarray(keep))


def _is_float(token):
    try:
        float(token)
        return True
    except ValueError:
        return False
