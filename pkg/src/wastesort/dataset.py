"""Corpus ingestion, deterministic splits and image preprocessing.

The corpus layout is one directory per class:

    <root>/{cardboard,glass,metal,paper,plastic,trash}/*.{jpg,jpeg,png}

Every function here is pure with respect to its inputs; splits depend only
on (corpus ids, ratios, seed), never on filesystem iteration order.
"""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image

from .backbones import get_backbone_entry, get_normalization
from .labels import CLASS_NAMES, ClassLabel, label_from_name

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")


class MissingClassDirectory(FileNotFoundError):
    """One or more of the six class directories is absent."""


class UnknownDirectory(ValueError):
    """The corpus root contains a subdirectory that is not a class."""


class EmptyCorpus(ValueError):
    """No decodable images were found."""


class InvalidRatios(ValueError):
    """Split ratios are negative or sum to more than 1."""


class DecodeFailure(ValueError):
    """An image file could not be decoded as RGB."""


@dataclass(frozen=True)
class LabeledImage:
    """One corpus image. `id` is the path relative to the corpus root."""

    path: Path
    label: ClassLabel
    id: str


@dataclass
class DatasetSplits:
    train: list[LabeledImage]
    test: list[LabeledImage]
    validation: list[LabeledImage]
    seed: int
    ratios: tuple[float, float, float]


@dataclass(frozen=True)
class ImageTensor:
    """H×W×3 float32 pixels mapped by a declared normalization."""

    data: np.ndarray
    height: int
    width: int
    value_range: tuple[float, float]


def class_counts(images: list[LabeledImage]) -> dict[str, int]:
    counts = Counter(img.label.name for img in images)
    return {name: counts.get(name, 0) for name in CLASS_NAMES}


def load_corpus(root_dir: str | Path) -> list[LabeledImage]:
    """Scan a class-per-directory corpus into labeled images, sorted by id.

    Files that fail a decode check are skipped with a warning; hidden
    entries are ignored. Per-class counts are logged.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise MissingClassDirectory(f"corpus root {root} does not exist")

    subdirs = {p.name for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")}
    missing = [name for name in CLASS_NAMES if name not in subdirs]
    if missing:
        raise MissingClassDirectory(f"missing class directories under {root}: {missing}")
    unknown = sorted(subdirs - set(CLASS_NAMES))
    if unknown:
        raise UnknownDirectory(f"unexpected directories under {root}: {unknown}")

    images: list[LabeledImage] = []
    skipped: list[str] = []
    for name in CLASS_NAMES:
        label = label_from_name(name)
        for path in sorted((root / name).iterdir()):
            if path.name.startswith(".") or not path.is_file():
                continue
            if path.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            rel = path.relative_to(root).as_posix()
            try:
                with Image.open(path) as im:
                    im.verify()
            except Exception:
                logger.warning("skipping undecodable image %s", rel)
                skipped.append(rel)
                continue
            images.append(LabeledImage(path=path, label=label, id=rel))

    if not images:
        raise EmptyCorpus(f"no decodable images under {root}")

    images.sort(key=lambda img: img.id)
    logger.info(
        "loaded %d images from %s (%s)%s",
        len(images), root,
        ", ".join(f"{k}={v}" for k, v in class_counts(images).items()),
        f"; skipped {len(skipped)} undecodable" if skipped else "",
    )
    return images


def _validate_ratios(ratios) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise InvalidRatios(f"expected (train, test, validation) ratios, got {ratios!r}")
    r = tuple(float(v) for v in ratios)
    if any(v < 0.0 or v > 1.0 for v in r):
        raise InvalidRatios(f"ratios must each lie in [0, 1], got {r}")
    if sum(r) > 1.0 + 1e-9:
        raise InvalidRatios(f"ratios sum to {sum(r)} > 1")
    return r


def split_corpus(
    corpus: list[LabeledImage],
    ratios: tuple[float, float, float],
    seed: int,
    stratify: bool = False,
) -> DatasetSplits:
    """Partition a corpus into train/test/validation deterministically.

    Ids are sorted lexicographically, shuffled by a seeded Fisher-Yates
    permutation, then sliced: floor(N*r_test) to test, floor(N*r_val) to
    validation, and everything else (including any unassigned residual)
    to train. `stratify=True` applies the same policy per class.
    """
    r = _validate_ratios(ratios)
    if not corpus:
        raise EmptyCorpus("cannot split an empty corpus")

    by_id = {img.id: img for img in corpus}
    if len(by_id) != len(corpus):
        raise ValueError("corpus ids must be unique")
    rng = random.Random(seed)

    def slice_ids(ids: list[str]) -> tuple[list[str], list[str], list[str]]:
        ids = sorted(ids)
        rng.shuffle(ids)
        n_test = math.floor(len(ids) * r[1])
        n_val = math.floor(len(ids) * r[2])
        return ids[:n_test], ids[n_test:n_test + n_val], ids[n_test + n_val:]

    if stratify:
        test_ids: list[str] = []
        val_ids: list[str] = []
        train_ids: list[str] = []
        for name in CLASS_NAMES:
            ids = [img.id for img in corpus if img.label.name == name]
            t, v, tr = slice_ids(ids)
            test_ids += t
            val_ids += v
            train_ids += tr
    else:
        test_ids, val_ids, train_ids = slice_ids(list(by_id))

    splits = DatasetSplits(
        train=[by_id[i] for i in train_ids],
        test=[by_id[i] for i in test_ids],
        validation=[by_id[i] for i in val_ids],
        seed=seed,
        ratios=r,
    )
    for part in ("train", "test", "validation"):
        images = getattr(splits, part)
        logger.info(
            "split %s: %d images (%s)",
            part, len(images),
            ", ".join(f"{k}={v}" for k, v in class_counts(images).items()),
        )
    return splits


def save_split_manifest(splits: DatasetSplits, path: str | Path) -> None:
    """Write the split as JSON so it can be reproduced exactly."""
    manifest = {
        "seed": splits.seed,
        "ratios": list(splits.ratios),
        "train": [img.id for img in splits.train],
        "test": [img.id for img in splits.test],
        "validation": [img.id for img in splits.validation],
    }
    Path(path).write_text(json.dumps(manifest, indent=2))


def load_split_manifest(path: str | Path, corpus: list[LabeledImage]) -> DatasetSplits:
    """Rebuild splits from a manifest against a loaded corpus."""
    manifest = json.loads(Path(path).read_text())
    by_id = {img.id: img for img in corpus}
    missing = [
        i for part in ("train", "test", "validation")
        for i in manifest[part] if i not in by_id
    ]
    if missing:
        raise KeyError(f"manifest references {len(missing)} ids absent from corpus, e.g. {missing[:3]}")
    return DatasetSplits(
        train=[by_id[i] for i in manifest["train"]],
        test=[by_id[i] for i in manifest["test"]],
        validation=[by_id[i] for i in manifest["validation"]],
        seed=int(manifest["seed"]),
        ratios=tuple(float(v) for v in manifest["ratios"]),
    )


# ---------------------------------------------------------------------------
# Preprocessing


def _to_tensor(im: Image.Image, input_size: tuple[int, int], normalization: str) -> ImageTensor:
    height, width = input_size
    norm = get_normalization(normalization)
    im = im.convert("RGB").resize((width, height), Image.BILINEAR)
    data = np.asarray(im, dtype=np.float32) / 255.0
    data = norm.apply(data).astype(np.float32)
    return ImageTensor(data=data, height=height, width=width, value_range=norm.value_range)


def preprocess_file(path: str | Path, input_size: tuple[int, int], normalization: str) -> ImageTensor:
    try:
        with Image.open(path) as im:
            return _to_tensor(im, input_size, normalization)
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeFailure(f"cannot decode image {path}: {exc}") from exc


def preprocess_bytes(raw: bytes, input_size: tuple[int, int], normalization: str) -> ImageTensor:
    try:
        with Image.open(BytesIO(raw)) as im:
            return _to_tensor(im, input_size, normalization)
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeFailure(f"cannot decode uploaded image: {exc}") from exc


def preprocess(image: LabeledImage | str | Path, backbone_id: str) -> ImageTensor:
    """Decode, resize and normalize one image for a registered backbone."""
    entry = get_backbone_entry(backbone_id)
    path = image.path if isinstance(image, LabeledImage) else Path(image)
    return preprocess_file(path, entry.input_size, entry.normalization)
