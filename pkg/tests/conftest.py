"""Shared fixtures: synthetic image corpora and a fast trained artifact.

The corpora are color-separable by class (base color + noise + one
contrasting square), so small networks can genuinely learn them; tests
that need a *trained* model use the toy backbone, which fits the corpus
in seconds on one CPU core.
"""

import logging
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from wastesort import (
    TrainConfig,
    build_classifier,
    export_portable,
    load_corpus,
    split_corpus,
    train,
)

logging.getLogger("wastesort").setLevel(logging.WARNING)

_criterion_lines: list[str] = []


def record_criterion(n: int, verdict: str, detail: str) -> None:
    """Collect one acceptance-criterion verdict for the end-of-run summary."""
    _criterion_lines.append(f"[criterion {n:02d}] {verdict}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)

BASE_COLORS = {
    "cardboard": (165, 120, 60),
    "glass": (40, 200, 190),
    "metal": (150, 150, 160),
    "paper": (235, 235, 225),
    "plastic": (200, 40, 40),
    "trash": (30, 30, 30),
}


def write_image(path: Path, base, rng, size=(96, 96)) -> None:
    h, w = size
    img = np.clip(np.array(base) + rng.normal(0, 18, (h, w, 3)), 0, 255).astype(np.uint8)
    x, y = rng.integers(4, max(w - 24, 5), 2)
    img[y:y + 16, x:x + 16] = 255 - img[y:y + 16, x:x + 16]
    Image.fromarray(img).save(path, quality=90)


def make_corpus(root: Path, per_class: int, seed: int = 0, size=(96, 96)) -> Path:
    rng = np.random.default_rng(seed)
    for name, base in BASE_COLORS.items():
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            write_image(class_dir / f"{name}{i:03d}.jpg", base, rng, size)
    return root


@pytest.fixture(scope="session")
def corpus_root(tmp_path_factory) -> Path:
    """72-image corpus (12 per class), used by most dataset/CLI tests."""
    return make_corpus(tmp_path_factory.mktemp("corpus"), per_class=12, seed=0)


@pytest.fixture(scope="session")
def tiny_bundle(corpus_root, tmp_path_factory):
    """A trained toy model plus its exported artifact and splits.

    Trained once per session; accurate enough on the synthetic corpus to
    give decisive, reproducible labels for parity and service tests.
    """
    splits = split_corpus(load_corpus(corpus_root), (0.6, 0.2, 0.2), seed=3)
    model = build_classifier("tiny_cnn", pretrained=False, seed=0)
    cfg = TrainConfig(learning_rate=2e-3, batch_size=16, max_epochs=12,
                      early_stop_patience=12, seed=0, stop_at_train_acc=0.99,
                      cache_preprocessed=True)
    model = train(model, splits, cfg)

    out_dir = tmp_path_factory.mktemp("artifact")
    artifact = export_portable(model, out_dir / "model.onnx")
    return {
        "model": model,
        "splits": splits,
        "artifact": artifact,
        "model_path": artifact.model_path,
        "sidecar_path": artifact.sidecar_path,
    }
