import hashlib
import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests import oracles.py directly

from artifact.dataset import split_811, synth_generate, synth_generate_fills
from artifact.segmenter import SegConfig, load_model, train


DESK_SEED = 42
DESK_N = 500
DESK_FRAME = (128, 128)
DESK_CFG = dict(
    backbone_id="small",
    max_iters=2000,
    input_size=128,
    batch_size=8,
    eval_interval=250,
    seed=0,
)
FILL_MODEL_CFG = dict(
    backbone_id="small",
    max_iters=1500,
    input_size=128,
    batch_size=8,
    eval_interval=250,
    seed=0,
)


def _code_fingerprint() -> str:
    """Hash of the modules whose behavior the trained fixtures depend on."""
    src = Path(__file__).resolve().parents[1] / "src" / "artifact"
    h = hashlib.sha256()
    for name in ("segmenter.py", "dataset.py", "masks.py", "imaging.py", "inpaint.py"):
        h.update((src / name).read_bytes())
    h.update(json.dumps([DESK_CFG, FILL_MODEL_CFG], sort_keys=True).encode())
    h.update(f"{DESK_SEED}:{DESK_N}:{DESK_FRAME}".encode())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def desk_dataset():
    samples = synth_generate(DESK_SEED, DESK_N, frame=DESK_FRAME, perfect_fraction=0.17)
    split = split_811([s.id for s in samples], seed=0)
    by_id = {s.id: s for s in samples}
    return {
        "train": [by_id[i] for i in split.train_ids],
        "val": [by_id[i] for i in split.val_ids],
        "test": [by_id[i] for i in split.test_ids],
    }


@pytest.fixture(scope="session")
def desk_models(desk_dataset):
    """Desk-scale trained segmenter plus its no-perfect-fills ablation twin.

    Training results are cached under /tmp keyed by a fingerprint of the
    relevant source files, so repeated suite runs in one environment do
    not retrain while any code change forces a fresh run.
    """
    cache = Path("/tmp/artifact_test_cache") / _code_fingerprint()
    cache.mkdir(parents=True, exist_ok=True)
    meta_path = cache / "meta.json"
    if meta_path.exists():
        with open(meta_path) as f:
            meta = json.load(f)
        return {
            "model": load_model(cache / "model.pt"),
            "model_noperf": load_model(cache / "model_noperf.pt"),
            "train_minutes": meta["train_minutes"],
        }

    t0 = time.monotonic()
    cfg = SegConfig(**DESK_CFG)
    model, _ = train(cfg, desk_dataset["train"], desk_dataset["val"])
    cfg2 = SegConfig(**DESK_CFG)
    no_perfect = [s for s in desk_dataset["train"] if s.label.any()]
    model_noperf, _ = train(cfg2, no_perfect, desk_dataset["val"])
    minutes = (time.monotonic() - t0) / 60.0

    model.save(cache / "model.pt")
    model_noperf.save(cache / "model_noperf.pt")
    with open(meta_path, "w") as f:
        json.dump({"train_minutes": minutes}, f)
    return {"model": model, "model_noperf": model_noperf, "train_minutes": minutes}


@pytest.fixture(scope="session")
def fill_trained_model():
    """Segmenter trained on the toy filler's own outputs with
    reference-mismatch labels: the desk-scale analog of labeling real
    inpainter results, used for the end-to-end refinement experiment."""
    cache = Path("/tmp/artifact_test_cache") / _code_fingerprint()
    cache.mkdir(parents=True, exist_ok=True)
    path = cache / "fill_model.pt"
    if path.exists():
        return load_model(path)
    fills = synth_generate_fills(5, 250, frame=DESK_FRAME, fill_iters_range=(30, 300))
    cfg = SegConfig(**FILL_MODEL_CFG)
    model, _ = train(cfg, fills[:225], fills[225:])
    model.save(path)
    return model
