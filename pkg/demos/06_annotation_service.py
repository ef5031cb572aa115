#!/usr/bin/env python3
"""Walk the annotation service end to end without a browser.

Uses the in-process test client: label task -> brushed submission ->
segmentation overlay -> steered refill -> five preference votes.
"""
import base64

import numpy as np
from fastapi.testclient import TestClient

from artifact.dataset import Sample, persist_sample
from artifact.imaging import image_to_png_bytes
from artifact.inpaint import ArtifactColorSegmenter
from artifact.masks import mask_to_png_bytes
from artifact.service import OracleBackendFactory, ServiceState, create_app
from pathlib import Path

root = Path(__file__).parent / "out" / "service_store"
rng = np.random.default_rng(0)

image = rng.integers(0, 254, size=(64, 64, 3), dtype=np.uint8)
hole = np.zeros((64, 64), dtype=bool)
hole[16:48, 16:48] = True
fill = image.copy()
speckle = rng.random((64, 64)) < 0.5
fill[hole & speckle] = (255, 0, 255)  # flag-colored artifacts to steer on
persist_sample(Sample(id="demo", image=image, hole=hole, fill=fill), root)

state = ServiceState(root, models={"default": ArtifactColorSegmenter()},
                     backends={"default": OracleBackendFactory(0.5, seed=0)})
client = TestClient(create_app(state))

task = client.get("/v1/tasks/label", params={"annotator_id": "demo-user"}).json()
print("label task:", task["sample_id"], "bbox:", task["bbox"], "(no hole bytes in payload)")

brush = np.zeros((64, 64), dtype=bool)
brush[20:30, 10:40] = True  # half in, half out; server clips
res = client.post("/v1/labels", json={
    "sample_id": task["sample_id"],
    "raw_label_png_b64": base64.b64encode(mask_to_png_bytes(brush)).decode(),
    "annotator_id": "demo-user",
}).json()
print("stored label area:", res["label_area"], "perfect fill:", res["perfect_fill"])

seg = client.post("/v1/segment", json={"sample_id": "demo"}).json()
print("segment: area", seg["artifact_area"], "PAR", round(seg["par"], 4),
      "cached:", seg["cached"])

pars = []
for _ in range(3):
    r = client.post("/v1/refill", json={"sample_id": "demo"}).json()
    if r.get("noop"):
        break
    pars.append(round(r["par"], 4))
print("PAR over refill rounds:", pars)
print("history strip:", client.get("/v1/traces/demo").json()["pars"])

img_b64 = base64.b64encode(image_to_png_bytes(fill)).decode()
client.post("/v1/pairs", json={"pair_id": "p0", "image_a_png_b64": img_b64,
                               "image_b_png_b64": img_b64})
for i, choice in enumerate(["A", "A", "A", "A", "B"]):
    vote = client.post("/v1/votes", json={"pair_id": "p0", "chosen": choice,
                                          "voter_id": f"voter{i}"}).json()
print("after 5 votes:", vote)
