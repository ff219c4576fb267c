"""Shared plumbing for the demo scripts.

Generates a small synthetic corpus (six color families with noise, so a
tiny network can actually learn it) and caches one quick-trained artifact
under demos/output so the later demos start fast.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from wastesort import (
    CLASS_NAMES,
    TrainConfig,
    build_classifier,
    export_portable,
    load_corpus,
    save_checkpoint,
    save_history_csv,
    save_split_manifest,
    split_corpus,
    train,
)

OUTPUT_DIR = Path(__file__).resolve().parent / "output"

BASE_COLORS = {
    "cardboard": (160, 120, 70),
    "glass": (90, 160, 170),
    "metal": (150, 150, 160),
    "paper": (230, 230, 220),
    "plastic": (200, 60, 60),
    "trash": (60, 60, 60),
}


def make_corpus(root: Path, per_class: int = 10, size=(96, 96), seed: int = 0) -> Path:
    """Write per_class JPEGs for each class under root; reuse if present."""
    if root.exists() and any(root.iterdir()):
        return root
    rng = np.random.default_rng(seed)
    for name in CLASS_NAMES:
        base = np.array(BASE_COLORS[name], dtype=np.float32)
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            noise = rng.normal(0.0, 18.0, size=(size[1], size[0], 3))
            pixels = np.clip(base + noise, 0, 255).astype(np.uint8)
            y, x = rng.integers(8, size[1] - 24), rng.integers(8, size[0] - 24)
            pixels[y:y + 16, x:x + 16] = 255 - pixels[y:y + 16, x:x + 16]
            Image.fromarray(pixels).save(class_dir / f"{name}{i:03d}.jpg", quality=90)
    return root


def ensure_artifact(force: bool = False) -> dict[str, Path]:
    """Train a small model on the synthetic corpus once and export it.

    Returns the paths the other demos need. Pass force=True to retrain
    even when demos/output already holds an artifact.
    """
    out = OUTPUT_DIR
    paths = {
        "corpus": out / "corpus",
        "checkpoint": out / "model.pt",
        "artifact": out / "model.onnx",
        "manifest": out / "split_manifest.json",
        "history": out / "history.csv",
    }
    if not force and paths["artifact"].exists() and paths["checkpoint"].exists():
        return paths

    out.mkdir(parents=True, exist_ok=True)
    make_corpus(paths["corpus"], per_class=10)
    corpus = load_corpus(paths["corpus"])
    splits = split_corpus(corpus, (0.6, 0.2, 0.2), seed=3)
    save_split_manifest(splits, paths["manifest"])

    model = build_classifier("tiny_cnn", pretrained=False, seed=0)
    cfg = TrainConfig(
        learning_rate=2e-3,
        batch_size=16,
        max_epochs=12,
        early_stop_patience=12,
        seed=0,
        stop_at_train_acc=0.99,
        cache_preprocessed=True,
    )
    model = train(model, splits, cfg)
    save_checkpoint(model, paths["checkpoint"])
    save_history_csv(model.history, paths["history"])
    export_portable(model, paths["artifact"])
    return paths
