"""Transfer-learning classifier: frozen-or-tuned backbone plus a dense head.

The network is `backbone -> dense(w1) -> dropout -> dense(w2) -> dense(6)`,
trained with Adam on cross-entropy. Training early-stops on validation
loss and hands back the weights from the best validation epoch. Trained
models export to a portable ONNX artifact with a metadata sidecar.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .backbones import build_backbone, get_backbone_entry
from .dataset import DatasetSplits, LabeledImage, preprocess_file
from .labels import CLASS_NAMES, NUM_CLASSES, ClassLabel, label_from_index
from .portable import PortableArtifact, as_hwc_array, sidecar_path_for

logger = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "gelu", "sigmoid")


class EmptyTrainSplit(ValueError):
    """Training requires at least one image in the train split."""


class NonFiniteLoss(RuntimeError):
    """A training step produced NaN or infinite loss."""


class SerializationFailure(RuntimeError):
    """Exporting or saving the model failed."""


@dataclass(frozen=True)
class HeadConfig:
    """Shape of the dense head stacked on the pooled backbone features."""

    dense_widths: tuple[int, int, int] = (512, 128, NUM_CLASSES)
    dropout_rate: float = 0.5
    hidden_activation: str = "relu"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.dense_widths)
        if len(widths) != 3 or any(w <= 0 for w in widths):
            raise ValueError(f"dense_widths must be three positive ints, got {self.dense_widths}")
        if widths[-1] != NUM_CLASSES:
            raise ValueError(f"final width must be {NUM_CLASSES}, got {widths[-1]}")
        object.__setattr__(self, "dense_widths", widths)
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.hidden_activation!r}; choose from {ACTIVATIONS}"
            )


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 20
    early_stop_patience: int = 5
    fine_tune_backbone: bool = True
    seed: int = 0
    augment_hflip: bool = False
    # stop as soon as train accuracy reaches this (None = never); used by
    # smoke runs that only need to demonstrate fitting capacity
    stop_at_train_acc: float | None = None
    # keep decoded tensors in memory across epochs; None = auto by size
    cache_preprocessed: bool | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.early_stop_patience < 1:
            raise ValueError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float | None
    val_acc: float | None


@dataclass
class TrainingHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int | None = None

    def final_train_acc(self) -> float:
        return self.epochs[-1].train_acc if self.epochs else 0.0


HISTORY_CSV_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


def save_history_csv(history: TrainingHistory, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_CSV_HEADER)
        for row in history.epochs:
            writer.writerow([
                row.epoch,
                repr(row.train_loss),
                repr(row.train_acc),
                "" if row.val_loss is None else repr(row.val_loss),
                "" if row.val_acc is None else repr(row.val_acc),
            ])


def load_history_csv(path: str | Path) -> TrainingHistory:
    epochs: list[EpochStats] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HISTORY_CSV_HEADER:
            raise ValueError(f"unexpected history header {header!r}")
        for row in reader:
            epochs.append(EpochStats(
                epoch=int(row[0]),
                train_loss=float(row[1]),
                train_acc=float(row[2]),
                val_loss=float(row[3]) if row[3] else None,
                val_acc=float(row[4]) if row[4] else None,
            ))
    with_val = [e for e in epochs if e.val_loss is not None]
    best = min(with_val, key=lambda e: e.val_loss).epoch if with_val else None
    return TrainingHistory(epochs=epochs, best_epoch=best)


# ---------------------------------------------------------------------------
# Model


def _make_net(backbone, feature_dim: int, head: HeadConfig):
    import torch.nn as nn

    acts = {"relu": nn.ReLU, "tanh": nn.Tanh, "gelu": nn.GELU, "sigmoid": nn.Sigmoid}
    act = acts[head.hidden_activation]
    w1, w2, w3 = head.dense_widths

    class ClassifierNet(nn.Module):
        def __init__(self):
            super().__init__()
            self.backbone = backbone
            self.head = nn.Sequential(
                nn.Linear(feature_dim, w1),
                act(),
                nn.Dropout(head.dropout_rate),
                nn.Linear(w1, w2),
                act(),
                nn.Linear(w2, w3),
            )

        def forward(self, x):
            return self.head(self.backbone(x))

    return ClassifierNet()


class WasteModel:
    """A classifier plus the input contract inference needs."""

    def __init__(self, net, backbone_id: str, head: HeadConfig,
                 history: TrainingHistory | None = None):
        entry = get_backbone_entry(backbone_id)
        self.net = net
        self.backbone_id = backbone_id
        self.head = head
        self.input_size: tuple[int, int] = entry.input_size
        self.normalization: str = entry.normalization
        self.labels: list[str] = list(CLASS_NAMES)
        self.history = history or TrainingHistory()

    def parameter_counts(self) -> tuple[int, int]:
        total = sum(p.numel() for p in self.net.parameters())
        trainable = sum(p.numel() for p in self.net.parameters() if p.requires_grad)
        return total, trainable

    def predict_batch(self, arrays: np.ndarray) -> np.ndarray:
        """(N, H, W, 3) float32 -> (N, 6) softmax probabilities."""
        import torch

        self.net.eval()
        batch = torch.from_numpy(
            np.ascontiguousarray(np.transpose(arrays.astype(np.float32, copy=False), (0, 3, 1, 2)))
        )
        with torch.no_grad():
            probs = torch.softmax(self.net(batch), dim=1)
        return probs.numpy()

    def predict(self, tensor) -> np.ndarray:
        arr = as_hwc_array(tensor, self.input_size)
        return self.predict_batch(arr[np.newaxis])[0]


def build_classifier(
    backbone_id: str,
    head: HeadConfig | None = None,
    *,
    pretrained: bool = True,
    seed: int | None = None,
) -> WasteModel:
    """Assemble backbone plus dense head for one registered architecture.

    The pooled feature width is verified with a dummy forward pass so a
    registry entry can never silently disagree with the real network.
    """
    import torch

    head = head or HeadConfig()
    entry = get_backbone_entry(backbone_id)
    if seed is not None:
        torch.manual_seed(seed)
    backbone = build_backbone(backbone_id, pretrained=pretrained)

    backbone.eval()
    with torch.no_grad():
        dummy = torch.zeros(1, 3, entry.input_size[0], entry.input_size[1])
        feat = backbone(dummy)
    if feat.ndim != 2 or feat.shape[1] != entry.feature_dim:
        raise ValueError(
            f"backbone {backbone_id!r} produced features of shape {tuple(feat.shape)}, "
            f"registry declares {entry.feature_dim}"
        )

    net = _make_net(backbone, entry.feature_dim, head)
    model = WasteModel(net, backbone_id, head)
    total, trainable = model.parameter_counts()
    logger.info(
        "built %s classifier: %d parameters (%d trainable), head widths %s",
        backbone_id, total, trainable, head.dense_widths,
    )
    return model


# ---------------------------------------------------------------------------
# Training


def _compute_loss(logits, targets):
    # split out so tests can inject pathological losses
    import torch.nn.functional as F

    return F.cross_entropy(logits, targets)


class _ImageDataset:
    """Decode-on-demand torch dataset with optional in-memory tensor cache."""

    def __init__(self, images: list[LabeledImage], input_size: tuple[int, int],
                 normalization: str, cache: bool):
        self.images = images
        self.input_size = input_size
        self.normalization = normalization
        self.augment_hflip = False
        self._cache: dict[int, "object"] | None = {} if cache else None

    def __len__(self):
        return len(self.images)

    def __getitem__(self, idx: int):
        import torch

        if self._cache is not None and idx in self._cache:
            chw = self._cache[idx]
        else:
            tensor = preprocess_file(self.images[idx].path, self.input_size, self.normalization)
            chw = torch.from_numpy(np.ascontiguousarray(tensor.data.transpose(2, 0, 1)))
            if self._cache is not None:
                self._cache[idx] = chw
        if self.augment_hflip and torch.rand(()) < 0.5:
            chw = torch.flip(chw, dims=(2,))
        return chw, self.images[idx].label.index


def _auto_cache(n_images: int, input_size: tuple[int, int], budget_bytes: int = 512 * 2**20) -> bool:
    return n_images * input_size[0] * input_size[1] * 3 * 4 <= budget_bytes


def _evaluate_pass(net, loader) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a loader, in eval mode."""
    import torch

    net.eval()
    total_loss = 0.0
    correct = 0
    seen = 0
    with torch.no_grad():
        for xb, yb in loader:
            logits = net(xb)
            total_loss += _compute_loss(logits, yb).item() * len(yb)
            correct += int((logits.argmax(dim=1) == yb).sum())
            seen += len(yb)
    return total_loss / seen, correct / seen


def train(model: WasteModel, splits: DatasetSplits, cfg: TrainConfig | None = None) -> WasteModel:
    """Fit the classifier on the train split, early-stopping on validation loss.

    After the loop the model carries the weights from the epoch with the
    lowest validation loss (final weights when there is no validation
    split). Epoch accuracies are measured in eval mode, so dropout and
    batch-norm noise never distort the reported numbers.
    """
    import torch
    from torch.utils.data import DataLoader

    cfg = cfg or TrainConfig()
    if not splits.train:
        raise EmptyTrainSplit("train split is empty")

    torch.manual_seed(cfg.seed)
    net = model.net
    if not cfg.fine_tune_backbone:
        for p in net.backbone.parameters():
            p.requires_grad = False

    cache = cfg.cache_preprocessed
    if cache is None:
        cache = _auto_cache(len(splits.train) + len(splits.validation), model.input_size)
    train_ds = _ImageDataset(splits.train, model.input_size, model.normalization, cache)
    val_ds = _ImageDataset(splits.validation, model.input_size, model.normalization, cache)

    loader_gen = torch.Generator().manual_seed(cfg.seed)
    train_loader = DataLoader(train_ds, batch_size=cfg.batch_size, shuffle=True,
                              generator=loader_gen)
    train_eval_loader = DataLoader(train_ds, batch_size=cfg.batch_size, shuffle=False)
    val_loader = DataLoader(val_ds, batch_size=cfg.batch_size, shuffle=False)

    params = [p for p in net.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)

    total, trainable = model.parameter_counts()
    logger.info(
        "training %s on %d images (%d validation), %d/%d trainable parameters, lr=%g",
        model.backbone_id, len(splits.train), len(splits.validation),
        trainable, total, cfg.learning_rate,
    )

    history: list[EpochStats] = []
    best_val = math.inf
    best_state = None
    best_epoch: int | None = None
    epochs_since_best = 0

    for epoch in range(1, cfg.max_epochs + 1):
        net.train()
        if not cfg.fine_tune_backbone:
            net.backbone.eval()  # keep frozen batch-norm statistics frozen
        train_ds.augment_hflip = cfg.augment_hflip

        running = 0.0
        seen = 0
        for xb, yb in train_loader:
            optimizer.zero_grad()
            loss = _compute_loss(net(xb), yb)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(
                    f"non-finite loss {loss.item()} at epoch {epoch}; "
                    f"lower the learning rate or check the inputs"
                )
            loss.backward()
            optimizer.step()
            running += loss.item() * len(yb)
            seen += len(yb)
        train_loss = running / seen

        train_ds.augment_hflip = False
        _, train_acc = _evaluate_pass(net, train_eval_loader)
        val_loss = val_acc = None
        if splits.validation:
            val_loss, val_acc = _evaluate_pass(net, val_loader)

        history.append(EpochStats(epoch, train_loss, train_acc, val_loss, val_acc))
        logger.info(
            "epoch %d/%d: train_loss=%.4f train_acc=%.4f val_loss=%s val_acc=%s",
            epoch, cfg.max_epochs, train_loss, train_acc,
            "-" if val_loss is None else f"{val_loss:.4f}",
            "-" if val_acc is None else f"{val_acc:.4f}",
        )

        if val_loss is not None:
            if val_loss < best_val:
                best_val = val_loss
                best_state = copy.deepcopy(net.state_dict())
                best_epoch = epoch
                epochs_since_best = 0
            else:
                epochs_since_best += 1
                if epochs_since_best >= cfg.early_stop_patience:
                    logger.info(
                        "early stop at epoch %d: no validation improvement for %d epochs",
                        epoch, cfg.early_stop_patience,
                    )
                    break

        if cfg.stop_at_train_acc is not None and train_acc >= cfg.stop_at_train_acc:
            logger.info("stopping at epoch %d: train accuracy %.4f reached target %.4f",
                        epoch, train_acc, cfg.stop_at_train_acc)
            if best_epoch is None or epoch > best_epoch:
                # a capacity smoke run wants the weights that hit the target
                best_state = None
                best_epoch = epoch
            break

    if best_state is not None:
        net.load_state_dict(best_state)
        logger.info("restored weights from epoch %d (val_loss=%.4f)", best_epoch, best_val)

    model.history = TrainingHistory(epochs=history, best_epoch=best_epoch or
                                    (history[-1].epoch if history else None))
    return model


def classify(model, tensor) -> tuple[ClassLabel, np.ndarray]:
    """Predict one image; ties resolve to the lowest class index."""
    probs = model.predict(tensor)
    return label_from_index(int(np.argmax(probs))), probs


# ---------------------------------------------------------------------------
# Persistence

CHECKPOINT_FORMAT = "waste-classifier-checkpoint-v1"


def save_checkpoint(model: WasteModel, path: str | Path) -> None:
    import torch

    payload = {
        "format": CHECKPOINT_FORMAT,
        "backbone_id": model.backbone_id,
        "head": {
            "dense_widths": list(model.head.dense_widths),
            "dropout_rate": model.head.dropout_rate,
            "hidden_activation": model.head.hidden_activation,
        },
        "state_dict": model.net.state_dict(),
    }
    try:
        torch.save(payload, path)
    except OSError as exc:
        raise SerializationFailure(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path: str | Path) -> WasteModel:
    import torch

    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise SerializationFailure(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise SerializationFailure(f"{path} is not a classifier checkpoint")

    head = HeadConfig(
        dense_widths=tuple(payload["head"]["dense_widths"]),
        dropout_rate=payload["head"]["dropout_rate"],
        hidden_activation=payload["head"]["hidden_activation"],
    )
    model = build_classifier(payload["backbone_id"], head, pretrained=False)
    model.net.load_state_dict(payload["state_dict"])
    return model


def export_portable(model: WasteModel, out_path: str | Path) -> PortableArtifact:
    """Write the model as an ONNX graph (softmax included) plus sidecar.

    The exported graph takes (N, 3, H, W) float32 and returns (N, 6)
    probabilities with a dynamic batch axis.
    """
    import torch
    import torch.nn as nn

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    wrapper = nn.Sequential(model.net, nn.Softmax(dim=1))
    wrapper.eval()
    dummy = torch.zeros(1, 3, model.input_size[0], model.input_size[1])
    try:
        torch.onnx.export(
            wrapper,
            (dummy,),
            str(out_path),
            input_names=["image"],
            output_names=["probabilities"],
            dynamic_axes={"image": {0: "batch"}, "probabilities": {0: "batch"}},
            dynamo=False,
        )
    except Exception as exc:
        out_path.unlink(missing_ok=True)
        raise SerializationFailure(f"export to {out_path} failed: {exc}") from exc

    metadata = {
        "backbone_id": model.backbone_id,
        "input_size": list(model.input_size),
        "normalization": model.normalization,
        "labels": list(model.labels),
        "exported_at": datetime.now(timezone.utc).isoformat(),
    }
    sidecar = sidecar_path_for(out_path)
    try:
        sidecar.write_text(json.dumps(metadata, indent=2))
    except OSError as exc:
        raise SerializationFailure(f"cannot write sidecar {sidecar}: {exc}") from exc
    logger.info("exported %s artifact to %s (+ %s)", model.backbone_id, out_path, sidecar.name)
    return PortableArtifact(model_path=out_path, sidecar_path=sidecar, metadata=metadata)
