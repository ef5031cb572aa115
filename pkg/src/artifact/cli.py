"""Batch command-line entry points for every pipeline stage.

Primary result values go to stdout; logs go to stderr. Every subcommand
that writes artifacts takes --out and records its fully resolved
configuration in a manifest.json there. Exit codes: 0 success, 2 usage
error, 3 validation/run failure (one machine-parsable line on stderr).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import evaluation as ev
from . import iterfill as itf
from .imaging import load_image
from .inpaint import (
    ArtifactColorSegmenter,
    ExternalCommandInpainter,
    OracleInpainter,
    ToyDiffusionInpainter,
)
from .masks import load_mask, save_mask
from .segmenter import SegConfig, load_model, save_log_csv, train

log = logging.getLogger("artifact.cli")


def _write_manifest(out_dir: Path, subcommand: str, config: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in config.items() if k != "func"}
    with open(out_dir / "manifest.json", "w") as f:
        json.dump({"subcommand": subcommand, "config": config}, f, indent=2, sort_keys=True)
        f.write("\n")


def _parse_kv(spec: str) -> tuple[str, dict]:
    """'oracle:p=0.5,seed=3' -> ('oracle', {'p': '0.5', 'seed': '3'})."""
    name, _, rest = spec.partition(":")
    opts = {}
    if rest:
        for part in rest.split(","):
            k, _, v = part.partition("=")
            opts[k.strip()] = v.strip()
    return name, opts


def parse_backend(spec: str, truth_image=None, seed: int = 0):
    """Backend specs: toy[:iters=N] | oracle:p=P[,seed=S] | cmd:<command>."""
    name, opts = _parse_kv(spec)
    if name == "toy":
        return ToyDiffusionInpainter(iters=int(opts.get("iters", 400)))
    if name == "oracle":
        if truth_image is None:
            raise ValueError("oracle backend needs a truth image (the input image is used)")
        p = float(opts.get("p", 0.5))
        return OracleInpainter(truth_image, p, rng_seed=int(opts.get("seed", seed)))
    if name == "cmd":
        _, _, command = spec.partition(":")
        if not command:
            raise ValueError("cmd backend needs a command string, e.g. cmd:python fill.py")
        return ExternalCommandInpainter(command, timeout=float(opts.get("timeout", 120.0)))
    raise ValueError(f"unknown backend spec {spec!r}")


def parse_segmenter(spec: str):
    """Segmenter specs: color | checkpoint:<path>."""
    name, _, rest = spec.partition(":")
    if name == "color":
        return ArtifactColorSegmenter()
    if name == "checkpoint":
        if not rest:
            raise ValueError("checkpoint segmenter needs a path")
        return load_model(rest)
    raise ValueError(f"unknown segmenter spec {spec!r}")


# -- subcommand handlers ------------------------------------------------------


def cmd_dataset_synth(args) -> int:
    out = Path(args.out)
    if args.source == "patterns":
        samples = ds.synth_generate(
            rng_seed=args.seed,
            n=args.n,
            frame=(args.size, args.size),
            artifact_kinds=tuple(args.kinds.split(",")),
            perfect_fraction=args.perfect_fraction,
            label_ratio=args.label_ratio,
        )
    else:
        lo, hi = (int(x) for x in args.fill_iters.split(","))
        samples = ds.synth_generate_fills(
            rng_seed=args.seed,
            n=args.n,
            frame=(args.size, args.size),
            fill_iters_range=(lo, hi),
        )
    root = out / "samples"
    for s in samples:
        ds.persist_sample(s, root)
    _write_manifest(out, "dataset-synth", vars(args))
    print(root)
    return 0


def cmd_dataset_stats(args) -> int:
    ids = ds.list_sample_ids(args.root)
    samples = (ds.load_sample(args.root, i) for i in ids)
    print(json.dumps(ds.dataset_stats(samples), sort_keys=True))
    return 0


def cmd_split(args) -> int:
    if args.n_from:
        ids = ds.list_sample_ids(args.n_from)
    else:
        with open(args.ids_file) as f:
            ids = [line.strip() for line in f if line.strip()]
    spec = ds.split_811(ids, seed=args.seed)
    ds.save_split(args.out, spec)
    print(json.dumps({"train": len(spec.train_ids), "val": len(spec.val_ids),
                      "test": len(spec.test_ids), "seed": spec.seed}))
    return 0


def cmd_train(args) -> int:
    out = Path(args.out)
    split = ds.load_split(args.split)
    train_samples = [ds.load_sample(args.root, i) for i in split.train_ids]
    val_samples = [ds.load_sample(args.root, i) for i in split.val_ids]
    cfg = SegConfig(
        backbone_id=args.backbone,
        max_iters=args.max_iters,
        base_lr=args.base_lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        lr_power=args.lr_power,
        min_lr=args.min_lr,
        flip_prob=args.flip_prob,
        jpeg_aug=not args.no_jpeg_aug,
        input_size=args.input_size,
        batch_size=args.batch_size,
        include_hole_channel=args.include_hole_channel,
        eval_interval=args.eval_interval,
        seed=args.seed,
    )
    extra = {}
    if args.pseudo_root:
        pseudo_ids = ds.list_sample_ids(args.pseudo_root)
        extra["pseudo_pretrain"] = [ds.load_sample(args.pseudo_root, i) for i in pseudo_ids]
    if args.negatives_dir:
        extra["real_negatives"] = [
            load_image(p) for p in sorted(Path(args.negatives_dir).glob("*.png"))
        ]
    model, rows = train(cfg, train_samples, val_samples, extra=extra or None)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "checkpoint.pt")
    save_log_csv(out / "log.csv", rows)
    _write_manifest(out, "train", vars(args))
    print(json.dumps({"best_val_iou": model.best_val_iou,
                      "checkpoint": str(out / "checkpoint.pt")}))
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.checkpoint)
    image = load_image(args.image)
    hole = load_mask(args.hole) if args.hole else None
    pred = model.predict(image, hole)
    save_mask(args.out, pred)
    result = {"artifact_area": int(pred.sum()), "out": str(args.out)}
    if hole is not None and hole.any():
        result["par"] = ev.par(pred, hole)
    print(json.dumps(result))
    return 0


def cmd_par(args) -> int:
    artifact = load_mask(args.artifact)
    hole = load_mask(args.hole)
    print(ev.par(artifact, hole))
    return 0


def _run_fill_batches(args, variant: str) -> int:
    out = Path(args.out)
    segmenter = parse_segmenter(args.segmenter) if variant == "iterfill" else None

    def run_one(name: str, image, hole, trace_dir: Path):
        backend = parse_backend(args.backend, truth_image=image, seed=args.seed)
        if variant == "iterfill":
            trace = itf.iterative_fill(image, hole, backend, segmenter,
                                       max_iters=args.max_iters)
        else:
            trace = itf.onion_fill(image, hole, backend, n_steps=args.n_steps,
                                   erode_iters_per_step=args.erode_iters)
        itf.save_trace(trace, trace_dir)
        return name, trace

    jobs = []
    if args.samples_root:
        for sid in ds.list_sample_ids(args.samples_root):
            s = ds.load_sample(args.samples_root, sid)
            jobs.append((sid, s.image, s.hole, out / "traces" / sid))
    else:
        image = load_image(args.image)
        hole = load_mask(args.hole)
        jobs.append(("single", image, hole, out / "trace"))

    results = []
    if args.jobs > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(run_one, *j) for j in jobs]
            results = [f.result() for f in futures]
    else:
        results = [run_one(*j) for j in jobs]

    _write_manifest(out, variant, vars(args))
    results.sort(key=lambda r: r[0])
    traces = [t for _, t in results]
    horizon = args.max_iters if variant == "iterfill" else args.n_steps
    payload = {
        "n_traces": len(traces),
        "mean_par_curve": itf.par_curve(traces, horizon),
        "pars": {name: t.pars for name, t in results},
    }
    print(json.dumps(payload))
    return 0


def cmd_iterfill(args) -> int:
    return _run_fill_batches(args, "iterfill")


def cmd_onionfill(args) -> int:
    return _run_fill_batches(args, "onionfill")


def cmd_eval_seg(args) -> int:
    pred_paths = sorted(Path(args.pred_dir).glob("*.png"))
    if not pred_paths:
        raise ValueError(f"no PNG masks in {args.pred_dir}")
    preds, gts = [], []
    for p in pred_paths:
        gt = Path(args.gt_dir) / p.name
        if not gt.exists():
            raise FileNotFoundError(f"no matching label for {p.name} in {args.gt_dir}")
        preds.append(load_mask(p))
        gts.append(load_mask(gt))
    scores = ev.seg_scores(preds, gts, per_image=args.per_image)
    print(json.dumps(scores.to_dict(), sort_keys=True))
    return 0


def cmd_eval_corr(args) -> int:
    with open(args.pairs) as f:
        pairs = json.load(f)
    result = ev.metric_correlation(pairs, polarity=args.polarity)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ev.write_json_report(out / "correlation.json", result.to_dict())
        ev.write_correlation_csv(out / "correlation.csv", result)
        _write_manifest(out, "eval-corr", vars(args))
    print(json.dumps({"percentage": result.percentage, "tie_count": result.tie_count,
                      "n_scored": result.n_scored}))
    return 0


def cmd_par_vs_holesize(args) -> int:
    with open(args.records) as f:
        records = json.load(f)
    edges = [float(x) for x in args.bins.split(",")]
    print(json.dumps(ev.par_vs_holesize(records, edges), sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import (
        OracleBackendFactory,
        ServiceState,
        SharedBackendFactory,
        create_app,
    )

    name, opts = _parse_kv(args.backend)
    if name == "oracle":
        backend = OracleBackendFactory(float(opts.get("p", 0.5)),
                                       seed=int(opts.get("seed", args.seed)))
    else:
        probe = parse_backend(args.backend, truth_image=None, seed=args.seed)
        backend = SharedBackendFactory(probe)
    state = ServiceState(
        args.root,
        models={"default": parse_segmenter(args.segmenter)},
        backends={"default": backend},
        lease_seconds=args.lease_seconds,
    )
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artifact",
        description="Inpainting artifact localization, scoring, and refill toolkit.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("dataset-synth", help="generate a labeled synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source", default="patterns", choices=["patterns", "fills"],
                   help="injected artifact patterns, or real toy-filler outputs "
                        "with reference-mismatch labels")
    p.add_argument("--kinds", default="blob,line_break,checker")
    p.add_argument("--perfect-fraction", type=float, default=0.17)
    p.add_argument("--label-ratio", type=float, default=0.3)
    p.add_argument("--fill-iters", default="30,300",
                   help="iteration range for --source fills")
    p.set_defaults(func=cmd_dataset_synth)

    p = sub.add_parser("dataset-stats", help="counts and label/hole ratio of a dataset")
    p.add_argument("--root", required=True)
    p.set_defaults(func=cmd_dataset_stats)

    p = sub.add_parser("split", help="deterministic 8:1:1 split")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--n-from", help="dataset root; ids are its sample directories")
    src.add_argument("--ids-file", help="text file with one id per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the artifact segmenter")
    p.add_argument("--root", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backbone", default="small", choices=["small", "medium"])
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--base-lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=0.0005)
    p.add_argument("--lr-power", type=float, default=0.9)
    p.add_argument("--min-lr", type=float, default=0.0001)
    p.add_argument("--flip-prob", type=float, default=0.5)
    p.add_argument("--no-jpeg-aug", action="store_true")
    p.add_argument("--input-size", type=int, default=512)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--include-hole-channel", action="store_true")
    p.add_argument("--eval-interval", type=int, default=250)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pseudo-root", help="dataset of pseudo-labeled samples to pretrain on")
    p.add_argument("--negatives-dir", help="directory of clean PNGs used as negatives")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="run a trained segmenter on one image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--hole")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("par", help="perceptual artifact ratio of a mask pair")
    p.add_argument("--artifact", required=True)
    p.add_argument("--hole", required=True)
    p.set_defaults(func=cmd_par)

    for variant, helptext in (
        ("iterfill", "iteratively refill detected artifact regions"),
        ("onionfill", "refill progressively eroded holes (baseline)"),
    ):
        p = sub.add_parser(variant, help=helptext)
        p.add_argument("--out", required=True)
        p.add_argument("--image")
        p.add_argument("--hole")
        p.add_argument("--samples-root", help="run on every sample in a dataset instead")
        p.add_argument("--backend", default="toy")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        if variant == "iterfill":
            p.add_argument("--segmenter", default="color")
            p.add_argument("--max-iters", type=int, default=5)
            p.set_defaults(func=cmd_iterfill)
        else:
            p.add_argument("--n-steps", type=int, default=5)
            p.add_argument("--erode-iters", type=int, default=3)
            p.set_defaults(func=cmd_onionfill)

    p = sub.add_parser("eval-seg", help="pooled IoU/precision/recall/F over mask dirs")
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--per-image", action="store_true")
    p.set_defaults(func=cmd_eval_seg)

    p = sub.add_parser("eval-corr", help="metric vs human preference agreement")
    p.add_argument("--pairs", required=True, help="JSON list of {score_a, score_b, human}")
    p.add_argument("--polarity", default="higher_better",
                   choices=["higher_better", "lower_better"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_corr)

    p = sub.add_parser("par-vs-holesize", help="mean PAR per hole-size bin and scene class")
    p.add_argument("--records", required=True,
                   help="JSON list of {scene_class, hole_ratio, par}")
    p.add_argument("--bins", default="0,0.1,0.2,0.3,1.0")
    p.set_defaults(func=cmd_par_vs_holesize)

    p = sub.add_parser("serve", help="run the annotation/review HTTP service")
    p.add_argument("--root", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--backend", default="toy")
    p.add_argument("--segmenter", default="color")
    p.add_argument("--lease-seconds", type=float, default=1800.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "subcommand", None) in ("iterfill", "onionfill"):
        if not args.samples_root and not (args.image and args.hole):
            parser.error("need --image and --hole, or --samples-root")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
