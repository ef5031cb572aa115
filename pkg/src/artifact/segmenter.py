"""Trainable artifact segmenter: model, optimization recipe, inference.

The network is a small encoder with a pyramid-pooling decoder head plus
an auxiliary FCN head whose loss is weighted 0.4. Optimization follows
the fixed recipe: SGD with momentum 0.9 and weight decay 5e-4, base
learning rate 0.01 decayed polynomially (power 0.9) to a 1e-4 floor,
random horizontal flips, optional JPEG-compression augmentation, and
checkpoint selection by best validation IoU.
"""
from __future__ import annotations

import csv
import dataclasses
import logging

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .imaging import as_image, jpeg_roundtrip, resize_image, resize_mask_nearest
from .masks import as_mask, intersect

log = logging.getLogger(__name__)

CLASSES = ("background", "artifact")


@dataclasses.dataclass
class SegConfig:
    backbone_id: str = "small"  # small | medium
    head_id: str = "pyramid_pooling"
    aux_head_weight: float = 0.4
    max_iters: int = 20000
    base_lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    lr_power: float = 0.9
    min_lr: float = 0.0001
    flip_prob: float = 0.5
    jpeg_aug: bool = True
    jpeg_quality_range: tuple[int, int] = (30, 95)
    input_size: int = 512
    batch_size: int = 8
    include_hole_channel: bool = False
    seed: int = 0
    init_checkpoint: str | None = None  # optional pretrained weights to start from
    pretrain_iters: int = 0  # iterations on the pseudo-label set before the main run
    eval_interval: int = 250
    device: str = "cpu"

    def validate(self) -> None:
        if self.backbone_id not in ("small", "medium"):
            raise ValueError(f"unknown backbone {self.backbone_id!r}")
        if self.head_id != "pyramid_pooling":
            raise ValueError(f"unknown head {self.head_id!r}")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be > 0")
        if not (0 < self.min_lr <= self.base_lr):
            raise ValueError("need 0 < min_lr <= base_lr")
        if not (0.0 <= self.flip_prob <= 1.0):
            raise ValueError("flip_prob must be in [0, 1]")
        if self.batch_size <= 0 or self.input_size <= 0:
            raise ValueError("batch_size and input_size must be positive")
        q0, q1 = self.jpeg_quality_range
        if not (1 <= q0 <= q1 <= 100):
            raise ValueError(f"bad jpeg_quality_range {self.jpeg_quality_range}")

    @property
    def in_channels(self) -> int:
        return 4 if self.include_hole_channel else 3


def poly_lr(cfg: SegConfig, iteration: int) -> float:
    """Polynomially decayed learning rate with a floor; non-increasing."""
    if iteration < 0 or iteration > cfg.max_iters:
        raise ValueError(f"iteration {iteration} outside [0, {cfg.max_iters}]")
    lr = cfg.base_lr * (1.0 - iteration / cfg.max_iters) ** cfg.lr_power
    return max(cfg.min_lr, lr)


class _ConvBNReLU(nn.Sequential):
    def __init__(self, cin, cout, stride=1, dilation=1):
        super().__init__(
            nn.Conv2d(cin, cout, 3, stride=stride, padding=dilation,
                      dilation=dilation, bias=False),
            nn.BatchNorm2d(cout),
            nn.ReLU(inplace=True),
        )


class _Backbone(nn.Module):
    """Small conv encoder; dilated final stage keeps spatial detail."""

    def __init__(self, backbone_id: str, in_channels: int):
        super().__init__()
        if backbone_id == "small":
            # stride 4 overall: stem /2, stage2 /2, stage3 dilated
            self.stem = nn.Sequential(_ConvBNReLU(in_channels, 16, stride=2),
                                      _ConvBNReLU(16, 16))
            self.stage2 = nn.Sequential(_ConvBNReLU(16, 32, stride=2),
                                        _ConvBNReLU(32, 32))
            self.stage3 = nn.Sequential(_ConvBNReLU(32, 64, dilation=2),
                                        _ConvBNReLU(64, 64, dilation=2))
            self.stem_channels, self.aux_channels, self.out_channels = 16, 32, 64
        else:
            self.stem = nn.Sequential(_ConvBNReLU(in_channels, 32, stride=2),
                                      _ConvBNReLU(32, 32))
            self.stage2 = nn.Sequential(_ConvBNReLU(32, 64, stride=2),
                                        _ConvBNReLU(64, 64))
            self.stage3 = nn.Sequential(_ConvBNReLU(64, 128, stride=2),
                                        _ConvBNReLU(128, 128))
            self.stage4 = nn.Sequential(_ConvBNReLU(128, 128, dilation=2),
                                        _ConvBNReLU(128, 128, dilation=2))
            self.stem_channels, self.aux_channels, self.out_channels = 32, 128, 128
        self.backbone_id = backbone_id

    def forward(self, x):
        stem = self.stem(x)
        x = self.stage2(stem)
        if self.backbone_id == "small":
            aux = x
            out = self.stage3(x)
        else:
            x = self.stage3(x)
            aux = x
            out = self.stage4(x)
        return stem, aux, out


class _PyramidPoolingHead(nn.Module):
    """Multi-scale context pooling, fused with stride-2 stem features
    before classification so small regions keep sharp boundaries."""

    POOL_SIZES = (1, 2, 3, 6)

    def __init__(self, cin, stem_c, n_classes=2):
        super().__init__()
        branch_c = cin // 4
        # GroupNorm here: the 1x1-pooled branch leaves BatchNorm without
        # statistics when the batch is a single image
        self.branches = nn.ModuleList(
            [
                nn.Sequential(nn.Conv2d(cin, branch_c, 1, bias=False),
                              nn.GroupNorm(1, branch_c), nn.ReLU(inplace=True))
                for _ in self.POOL_SIZES
            ]
        )
        fused = cin + branch_c * len(self.POOL_SIZES)
        self.fuse = _ConvBNReLU(fused, cin)
        self.decode = _ConvBNReLU(cin + stem_c, cin // 2)
        self.classifier = nn.Conv2d(cin // 2, n_classes, 1)

    def forward(self, feat, stem):
        h, w = feat.shape[2:]
        pieces = [feat]
        for size, branch in zip(self.POOL_SIZES, self.branches):
            p = F.adaptive_avg_pool2d(feat, size)
            p = branch(p)
            pieces.append(F.interpolate(p, size=(h, w), mode="bilinear", align_corners=False))
        ctx = self.fuse(torch.cat(pieces, dim=1))
        ctx = F.interpolate(ctx, size=stem.shape[2:], mode="bilinear", align_corners=False)
        return self.classifier(self.decode(torch.cat([ctx, stem], dim=1)))


class _AuxHead(nn.Module):
    def __init__(self, cin, n_classes=2):
        super().__init__()
        self.block = _ConvBNReLU(cin, cin)
        self.classifier = nn.Conv2d(cin, n_classes, 1)

    def forward(self, feat):
        return self.classifier(self.block(feat))


class ArtifactSegNet(nn.Module):
    """Backbone + pyramid-pooling main head + auxiliary FCN head."""

    def __init__(self, cfg: SegConfig):
        super().__init__()
        self.backbone = _Backbone(cfg.backbone_id, cfg.in_channels)
        self.head = _PyramidPoolingHead(self.backbone.out_channels,
                                        self.backbone.stem_channels)
        self.aux_head = _AuxHead(self.backbone.aux_channels)

    def forward(self, x):
        size = x.shape[2:]
        stem, aux_feat, feat = self.backbone(x)
        main = F.interpolate(self.head(feat, stem), size=size, mode="bilinear",
                             align_corners=False)
        aux = F.interpolate(self.aux_head(aux_feat), size=size, mode="bilinear",
                            align_corners=False)
        return main, aux


def compound_loss(main_logits, aux_logits, target, aux_weight: float):
    """Pixel cross-entropy on both heads; aux scaled by its weight."""
    loss_main = F.cross_entropy(main_logits, target)
    loss_aux = F.cross_entropy(aux_logits, target)
    return loss_main + aux_weight * loss_aux, loss_main, loss_aux


def _to_input_tensor(image: np.ndarray, hole: np.ndarray | None, cfg: SegConfig) -> torch.Tensor:
    x = torch.from_numpy(image.astype(np.float32) / 255.0 - 0.5).permute(2, 0, 1)
    if cfg.include_hole_channel:
        if hole is None:
            ch = torch.zeros(1, *image.shape[:2])
        else:
            ch = torch.from_numpy(hole.astype(np.float32))[None]  # {0,1} channel
        x = torch.cat([x, ch], dim=0)
    return x


class SegModel:
    """A trained segmenter: config + weights; immutable after training."""

    classes = CLASSES

    def __init__(self, config: SegConfig, net: ArtifactSegNet, best_val_iou: float | None = None):
        self.config = config
        self.net = net.eval()
        self.best_val_iou = best_val_iou

    @torch.no_grad()
    def predict(self, image: np.ndarray, hole: np.ndarray | None = None) -> np.ndarray:
        """Binary artifact mask at the image's own resolution.

        Off-size inputs are resized to the model resolution and the mask
        restored with nearest-neighbor; if a hole is given, the output is
        clipped to it.
        """
        image = as_image(image)
        orig_hw = image.shape[:2]
        size = self.config.input_size
        work_hole = hole
        if orig_hw != (size, size):
            image = resize_image(image, (size, size))
            if hole is not None:
                work_hole = resize_mask_nearest(as_mask(hole), (size, size))
        x = _to_input_tensor(image, work_hole, self.config)[None].to(self.config.device)
        main, _ = self.net(x)
        pred = main.argmax(dim=1)[0].cpu().numpy().astype(bool)
        if orig_hw != (size, size):
            pred = resize_mask_nearest(pred, orig_hw)
        if hole is not None:
            pred = intersect(pred, as_mask(hole))
        return pred

    def save(self, path) -> None:
        torch.save(
            {
                "config": dataclasses.asdict(self.config),
                "state_dict": self.net.state_dict(),
                "best_val_iou": self.best_val_iou,
            },
            path,
        )


def load_model(path) -> SegModel:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg_dict = dict(payload["config"])
    cfg_dict["jpeg_quality_range"] = tuple(cfg_dict["jpeg_quality_range"])
    cfg = SegConfig(**cfg_dict)
    net = ArtifactSegNet(cfg)
    net.load_state_dict(payload["state_dict"])
    return SegModel(cfg, net, best_val_iou=payload.get("best_val_iou"))


def predict_artifacts(model: SegModel, image: np.ndarray,
                      hole: np.ndarray | None = None) -> np.ndarray:
    """Functional form of SegModel.predict."""
    return model.predict(image, hole)


@dataclasses.dataclass
class _Item:
    image: np.ndarray  # training input (the fill when present)
    target: np.ndarray  # bool artifact mask; all-False for negatives
    hole: np.ndarray  # for the optional hole input channel


def _items_from_samples(samples, cfg: SegConfig) -> list[_Item]:
    items = []
    for s in samples:
        if s.label is None:
            raise ValueError(f"sample {s.id} has no label; training needs labeled samples")
        s.validate()  # enforces label canonicalized inside the hole
        img, target, hole = s.training_input, as_mask(s.label), as_mask(s.hole)
        size = cfg.input_size
        if img.shape[:2] != (size, size):
            img = resize_image(img, (size, size))
            target = resize_mask_nearest(target, (size, size))
            hole = resize_mask_nearest(hole, (size, size))
        items.append(_Item(image=img, target=target, hole=hole))
    return items


def _items_from_negatives(images, cfg: SegConfig) -> list[_Item]:
    items = []
    size = cfg.input_size
    for img in images:
        img = as_image(img)
        if img.shape[:2] != (size, size):
            img = resize_image(img, (size, size))
        empty = np.zeros(img.shape[:2], dtype=bool)
        items.append(_Item(image=img, target=empty, hole=empty))
    return items


def _batch_tensors(items, idx, cfg, rng):
    xs, ys = [], []
    for i in idx:
        it = items[i]
        img, target, hole = it.image, it.target, it.hole
        if cfg.flip_prob > 0 and rng.random() < cfg.flip_prob:
            img = img[:, ::-1].copy()
            target = target[:, ::-1].copy()
            hole = hole[:, ::-1].copy()
        if cfg.jpeg_aug and rng.random() < 0.5:
            q = int(rng.integers(cfg.jpeg_quality_range[0], cfg.jpeg_quality_range[1] + 1))
            img = jpeg_roundtrip(img, q)
        xs.append(_to_input_tensor(img, hole, cfg))
        ys.append(torch.from_numpy(target.astype(np.int64)))
    return torch.stack(xs).to(cfg.device), torch.stack(ys).to(cfg.device)


def pooled_val_iou(model: SegModel, val_samples) -> float | None:
    """Dataset-pooled artifact IoU on a validation set (fraction in [0,1])."""
    tp = fp = fn = 0
    for s in val_samples:
        if s.label is None:
            continue
        pred = model.predict(s.training_input, hole=s.hole)
        gt = as_mask(s.label)
        tp += int((pred & gt).sum())
        fp += int((pred & ~gt).sum())
        fn += int((~pred & gt).sum())
    denom = tp + fp + fn
    return tp / denom if denom > 0 else None


def _run_phase(net, cfg, items, val_samples, start_iter, n_iters, optimizer, rng,
               rows, select_best):
    best_iou = -1.0
    best_state = None
    for it in range(n_iters):
        lr = poly_lr(cfg, min(start_iter + it, cfg.max_iters))
        for group in optimizer.param_groups:
            group["lr"] = lr
        if cfg.batch_size >= len(items):
            # frozen batch: every item, repeated to fill the batch
            idx = np.resize(np.arange(len(items)), cfg.batch_size)
        else:
            idx = rng.integers(0, len(items), size=cfg.batch_size)
        x, y = _batch_tensors(items, idx, cfg, rng)
        net.train()
        main, aux = net(x)
        loss, loss_main, loss_aux = compound_loss(main, aux, y, cfg.aux_head_weight)
        if not torch.isfinite(loss):
            raise RuntimeError(
                f"non-finite loss at iteration {start_iter + it}: "
                f"main={float(loss_main.detach())}, aux={float(loss_aux.detach())}, lr={lr}"
            )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        row = {
            "iter": start_iter + it,
            "lr": lr,
            "loss_main": float(loss_main.detach()),
            "loss_aux": float(loss_aux.detach()),
            "val_iou": None,
        }
        is_last = it == n_iters - 1
        if select_best and val_samples and ((it + 1) % cfg.eval_interval == 0 or is_last):
            net.eval()
            iou = pooled_val_iou(SegModel(cfg, net), val_samples)
            row["val_iou"] = iou
            if iou is not None and iou > best_iou:
                best_iou = iou
                best_state = {k: v.detach().clone() for k, v in net.state_dict().items()}
            log.info("iter %d lr %.5f loss %.4f val_iou %s",
                     start_iter + it, lr, float(loss.detach()), iou)
        rows.append(row)
    return best_iou, best_state


def train(cfg: SegConfig, train_samples, val_samples, extra: dict | None = None):
    """Train a segmenter; returns (SegModel, training-log rows).

    `extra` may carry a "pseudo_pretrain" sample list (trained on first,
    for cfg.pretrain_iters) and "real_negatives", a list of clean images
    added to the main phase with all-background targets. Perfect-fill
    samples need no special handling: their empty labels already train
    as all-background. The best-validation-IoU checkpoint is what is
    returned.
    """
    cfg.validate()
    extra = extra or {}
    train_samples = list(train_samples)
    if not train_samples:
        raise ValueError("empty training set")

    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    net = ArtifactSegNet(cfg).to(cfg.device)
    if cfg.init_checkpoint:
        init = torch.load(cfg.init_checkpoint, map_location="cpu", weights_only=False)
        net.load_state_dict(init["state_dict"])
    optimizer = torch.optim.SGD(
        net.parameters(), lr=cfg.base_lr, momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
    )

    rows: list[dict] = []
    pseudo = extra.get("pseudo_pretrain")
    if pseudo:
        n_pre = cfg.pretrain_iters or max(cfg.max_iters // 4, 1)
        pre_items = _items_from_samples(pseudo, cfg)
        _run_phase(net, cfg, pre_items, None, 0, n_pre, optimizer, rng, rows,
                   select_best=False)
        # momentum from the pretrain phase does not carry into the main run
        optimizer = torch.optim.SGD(
            net.parameters(), lr=cfg.base_lr, momentum=cfg.momentum,
            weight_decay=cfg.weight_decay,
        )

    items = _items_from_samples(train_samples, cfg)
    negatives = extra.get("real_negatives")
    if negatives:
        items.extend(_items_from_negatives(negatives, cfg))

    val_samples = list(val_samples) if val_samples else []
    best_iou, best_state = _run_phase(
        net, cfg, items, val_samples, 0, cfg.max_iters, optimizer, rng, rows,
        select_best=True,
    )
    if best_state is not None:
        net.load_state_dict(best_state)
    net.eval()
    return SegModel(cfg, net, best_val_iou=(best_iou if best_iou >= 0 else None)), rows


def save_log_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["iter", "lr", "loss_main", "loss_aux", "val_iou"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
