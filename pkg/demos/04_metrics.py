#!/usr/bin/env python3
"""The evaluation toolbox: PAR, pooled segmentation scores, five-voter
preference aggregation, metric-human agreement, PAR vs hole size.

Reference numbers from the large-scale published study ship in
artifact.reference for context; they are documentation fixtures, not
reproducible from this package.
"""
import numpy as np

from artifact.evaluation import (
    metric_correlation,
    par,
    par_vs_holesize,
    seg_scores,
    strong_preference,
)
from artifact.reference import (
    REFERENCE_METRIC_AGREEMENT,
    REFERENCE_SEG_BENCHMARK,
)

rng = np.random.default_rng(0)

# PAR: detected artifact area over hole area; lower is better.
hole = np.zeros((64, 64), dtype=bool)
hole[16:48, 16:48] = True
artifact = np.zeros((64, 64), dtype=bool)
artifact[20:30, 20:40] = True
print("PAR:", par(artifact, hole))

# Pooled segmentation scores accumulate pixels over the whole dataset.
preds = [rng.random((32, 32)) < 0.3 for _ in range(10)]
gts = [rng.random((32, 32)) < 0.3 for _ in range(10)]
print("pooled scores:", seg_scores(preds, gts).to_dict())

# The published benchmark's F column is the harmonic mean of P and R:
row = REFERENCE_SEG_BENCHMARK[2]
f = 2 * row["precision"] * row["recall"] / (row["precision"] + row["recall"])
print(f"{row['name']}: recomputed F {f:.2f} vs published {row['fscore']}")

# Five voters, strong preference only at 4-of-5 agreement.
for votes in [(5, 0), (4, 1), (3, 2)]:
    print("votes", votes, "->", strong_preference(*votes))

# Agreement between a metric and strong human preferences; PAR counts as
# lower-better. Published overall agreement for context:
print("published overall agreement:", REFERENCE_METRIC_AGREEMENT["overall"])
pairs = [
    {"score_a": rng.random(), "score_b": rng.random(), "human": rng.choice(["A", "B"])}
    for _ in range(30)
]
result = metric_correlation(pairs, polarity="lower_better")
print("random-metric agreement:", result.percentage, "ties:", result.tie_count)

# Mean PAR per hole-size bin, split by scene class.
records = [
    {"scene_class": rng.choice(["man_made", "natural"]),
     "hole_ratio": float(rng.uniform(0.02, 0.4)),
     "par": float(rng.uniform(0, 0.6))}
    for _ in range(200)
]
table = par_vs_holesize(records, [0.0, 0.1, 0.2, 0.3, 1.0])
for cls, bins in table.items():
    print(cls, [(b["lo"], b["hi"], None if b["mean_par"] is None else round(b["mean_par"], 3))
                for b in bins])
