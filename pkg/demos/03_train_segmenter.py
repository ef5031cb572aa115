#!/usr/bin/env python3
"""Train a small artifact segmenter on synthetic data (a few minutes on CPU).

Uses the fixed recipe: SGD momentum 0.9, weight decay 5e-4, base lr 0.01
decaying polynomially (power 0.9) to a 1e-4 floor, flips and JPEG
augmentation, checkpoint picked by best validation IoU. Pass --quick for
a shorter smoke run.
"""
import sys
from pathlib import Path

from artifact.dataset import split_811, synth_generate
from artifact.segmenter import SegConfig, poly_lr, save_log_csv, train

out = Path(__file__).parent / "out" / "training"
out.mkdir(parents=True, exist_ok=True)

quick = "--quick" in sys.argv
n, iters = (60, 200) if quick else (500, 2000)

samples = synth_generate(42, n, frame=(128, 128), perfect_fraction=0.17)
split = split_811([s.id for s in samples], seed=0)
by_id = {s.id: s for s in samples}

cfg = SegConfig(backbone_id="small", max_iters=iters, input_size=128,
                batch_size=8, eval_interval=max(iters // 8, 1), seed=0)
print("lr schedule preview:", [round(poly_lr(cfg, t), 5) for t in
                               range(0, iters + 1, max(iters // 4, 1))])

model, rows = train(cfg, [by_id[i] for i in split.train_ids],
                    [by_id[i] for i in split.val_ids])
print("best validation IoU:", round(model.best_val_iou, 4))

model.save(out / "checkpoint.pt")
save_log_csv(out / "log.csv", rows)
print("checkpoint and training log under", out)
