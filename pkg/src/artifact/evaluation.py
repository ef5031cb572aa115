"""Quality metrics and study aggregation.

Covers the perceptual artifact ratio (PAR), pooled segmentation scores,
strong-preference aggregation of five-way votes, metric-vs-human
correlation, and the PAR-vs-hole-size breakdown.
"""
from __future__ import annotations

import csv
import dataclasses
import json

import numpy as np

from .masks import area, as_mask, intersect


def par(artifact: np.ndarray, hole: np.ndarray) -> float:
    """Perceptual artifact ratio: artifact area inside the hole / hole area.

    Lower is better; 0 means no detected artifacts, 1 means the whole
    hole is objectionable. The artifact mask is intersected with the
    hole first, so out-of-hole pixels never count.
    """
    hole = as_mask(hole)
    hole_area = area(hole)
    if hole_area == 0:
        raise ValueError("hole mask is empty; PAR is undefined")
    return area(intersect(artifact, hole)) / hole_area


@dataclasses.dataclass(frozen=True)
class SegScores:
    """Percent-scale segmentation scores; None marks an undefined score."""

    iou: float | None
    precision: float | None
    recall: float | None
    fscore: float | None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _scores_from_counts(tp: int, fp: int, fn: int) -> SegScores:
    iou = 100.0 * tp / (tp + fp + fn) if (tp + fp + fn) > 0 else None
    precision = 100.0 * tp / (tp + fp) if (tp + fp) > 0 else None
    recall = 100.0 * tp / (tp + fn) if (tp + fn) > 0 else None
    if precision is not None and recall is not None and (precision + recall) > 0:
        fscore = 2 * precision * recall / (precision + recall)
    else:
        fscore = None
    return SegScores(iou=iou, precision=precision, recall=recall, fscore=fscore)


def confusion_counts(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int, int]:
    """(TP, FP, FN) pixel counts for one prediction/label pair."""
    pred, gt = as_mask(pred), as_mask(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"mask shape mismatch: {pred.shape} vs {gt.shape}")
    tp = int((pred & gt).sum())
    fp = int((pred & ~gt).sum())
    fn = int((~pred & gt).sum())
    return tp, fp, fn


def seg_scores(preds, gts, per_image: bool = False) -> SegScores:
    """IoU/Precision/Recall/Fscore over aligned prediction and label lists.

    The default pools TP/FP/FN over every pixel of every image before
    computing the scores (the benchmark-tool convention). per_image=True
    instead averages per-image scores, skipping images where a score is
    undefined.
    """
    preds, gts = list(preds), list(gts)
    if len(preds) != len(gts):
        raise ValueError(f"got {len(preds)} predictions but {len(gts)} labels")
    if not preds:
        raise ValueError("empty prediction list")

    if not per_image:
        tp = fp = fn = 0
        for p, g in zip(preds, gts):
            t, f, n = confusion_counts(p, g)
            tp, fp, fn = tp + t, fp + f, fn + n
        return _scores_from_counts(tp, fp, fn)

    fields: dict[str, list[float]] = {"iou": [], "precision": [], "recall": [], "fscore": []}
    for p, g in zip(preds, gts):
        s = _scores_from_counts(*confusion_counts(p, g))
        for name in fields:
            v = getattr(s, name)
            if v is not None:
                fields[name].append(v)
    return SegScores(
        **{name: (float(np.mean(vals)) if vals else None) for name, vals in fields.items()}
    )


def strong_preference(votes_a: int, votes_b: int) -> str:
    """'A', 'B', or 'none' under the 4-out-of-5 agreement rule."""
    if votes_a < 0 or votes_b < 0 or votes_a + votes_b != 5:
        raise ValueError(f"need exactly 5 votes, got ({votes_a}, {votes_b})")
    if votes_a >= 4:
        return "A"
    if votes_b >= 4:
        return "B"
    return "none"


@dataclasses.dataclass(frozen=True)
class CorrelationResult:
    """Agreement between a metric's ranking and strong human preferences."""

    percentage: float | None
    tie_count: int
    n_scored: int
    rows: list[dict]

    def to_dict(self) -> dict:
        return {
            "percentage": self.percentage,
            "tie_count": self.tie_count,
            "n_scored": self.n_scored,
            "rows": self.rows,
        }


def metric_correlation(pairs, polarity: str = "higher_better") -> CorrelationResult:
    """Fraction of non-tied pairs where the metric picks the human side.

    `pairs` is an iterable of {score_a, score_b, human} with human in
    {'A','B'}; only strong-preference pairs belong here. PAR-style
    metrics pass polarity='lower_better'. Ties are excluded from the
    denominator and surfaced via tie_count; the per-pair rows are kept
    for the audit report.
    """
    if polarity not in ("higher_better", "lower_better"):
        raise ValueError(f"unknown polarity {polarity!r}")
    rows = []
    matches = 0
    ties = 0
    scored = 0
    for i, p in enumerate(pairs):
        a, b, human = float(p["score_a"]), float(p["score_b"]), p["human"]
        if human not in ("A", "B"):
            raise ValueError(f"pair {i}: human must be 'A' or 'B', got {human!r}")
        if a == b:
            ties += 1
            rows.append({"index": i, "score_a": a, "score_b": b, "human": human,
                         "metric": "tie", "match": None})
            continue
        better_a = a > b if polarity == "higher_better" else a < b
        metric_pick = "A" if better_a else "B"
        match = metric_pick == human
        matches += int(match)
        scored += 1
        rows.append({"index": i, "score_a": a, "score_b": b, "human": human,
                     "metric": metric_pick, "match": match})
    pct = 100.0 * matches / scored if scored > 0 else None
    return CorrelationResult(percentage=pct, tie_count=ties, n_scored=scored, rows=rows)


# Scene classes used by the hole-size analysis; edit freely to re-bucket
# outdoor/indoor categories from a scene dataset.
SCENE_CLASS_TABLE: dict[str, str] = {
    "building": "man_made",
    "room": "man_made",
    "shop": "man_made",
    "stadium": "man_made",
    "studio": "man_made",
    "factory": "man_made",
    "sky": "natural",
    "land": "natural",
    "mountain": "natural",
    "forest": "natural",
    "garden": "natural",
    "pasture": "natural",
    "beach": "natural",
    "desert": "natural",
}


def par_vs_holesize(records, bin_edges) -> dict[str, list[dict]]:
    """Mean PAR per hole-size bin, split by scene class.

    `records` is an iterable of {scene_class, hole_ratio, par}. Bin
    edges must start at 0 and end at 1; bin i covers
    [edges[i], edges[i+1]) with the final bin closed at 1. Empty bins
    report mean None.
    """
    edges = [float(e) for e in bin_edges]
    if len(edges) < 2 or edges[0] != 0.0 or edges[-1] != 1.0 or sorted(edges) != edges:
        raise ValueError(f"bin edges must rise from 0 to 1, got {edges}")

    sums: dict[str, list[float]] = {}
    counts: dict[str, list[int]] = {}
    n_bins = len(edges) - 1
    for rec in records:
        cls = rec["scene_class"]
        if cls not in ("man_made", "natural"):
            raise ValueError(f"scene_class must be man_made or natural, got {cls!r}")
        ratio, p = float(rec["hole_ratio"]), float(rec["par"])
        idx = min(int(np.searchsorted(edges, ratio, side="right")) - 1, n_bins - 1)
        idx = max(idx, 0)
        sums.setdefault(cls, [0.0] * n_bins)
        counts.setdefault(cls, [0] * n_bins)
        sums[cls][idx] += p
        counts[cls][idx] += 1

    out: dict[str, list[dict]] = {}
    for cls in sums:
        out[cls] = [
            {
                "lo": edges[i],
                "hi": edges[i + 1],
                "mean_par": (sums[cls][i] / counts[cls][i]) if counts[cls][i] else None,
                "count": counts[cls][i],
            }
            for i in range(n_bins)
        ]
    return out


def write_json_report(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def write_correlation_csv(path, result: CorrelationResult) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=["index", "score_a", "score_b", "human", "metric", "match"]
        )
        writer.writeheader()
        for row in result.rows:
            writer.writerow(row)
