"""Portable-artifact inference, independent of the training stack.

An exported model is one ONNX file plus a `<name>.meta.json` sidecar
carrying input size, normalization, label order and provenance. This
module loads that pair with onnxruntime only, so services and the
offline predictor never import the training framework.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ImageTensor, LabeledImage, preprocess_file

logger = logging.getLogger(__name__)

SIDECAR_FIELDS = ("backbone_id", "input_size", "normalization", "labels", "exported_at")


class CorruptArtifact(RuntimeError):
    """The model file is missing, truncated or otherwise unloadable."""


class MissingSidecar(FileNotFoundError):
    """The `<name>.meta.json` companion file is absent."""


class ShapeMismatch(ValueError):
    """Input tensor shape does not match the model's declared input."""


def sidecar_path_for(model_path: str | Path) -> Path:
    return Path(model_path).with_suffix(".meta.json")


@dataclass(frozen=True)
class PortableArtifact:
    model_path: Path
    sidecar_path: Path
    metadata: dict


def as_hwc_array(tensor, input_size: tuple[int, int]) -> np.ndarray:
    """Validate an ImageTensor/array against (H, W, 3) and return float32."""
    arr = tensor.data if isinstance(tensor, ImageTensor) else np.asarray(tensor)
    expected = (input_size[0], input_size[1], 3)
    if arr.shape != expected:
        raise ShapeMismatch(f"expected tensor of shape {expected}, got {arr.shape}")
    return arr.astype(np.float32, copy=False)


class PortableModel:
    """Inference-only model backed by an onnxruntime session."""

    def __init__(self, session, metadata: dict, model_path: Path):
        self.session = session
        self.metadata = metadata
        self.model_path = model_path
        self.input_size: tuple[int, int] = tuple(metadata["input_size"])
        self.normalization: str = metadata["normalization"]
        self.labels: list[str] = list(metadata["labels"])
        self._input_name = session.get_inputs()[0].name

    def predict_batch(self, arrays: np.ndarray) -> np.ndarray:
        """(N, H, W, 3) float32 -> (N, 6) probabilities."""
        batch = np.transpose(arrays.astype(np.float32, copy=False), (0, 3, 1, 2))
        (probs,) = self.session.run(None, {self._input_name: batch})
        return probs

    def predict(self, tensor) -> np.ndarray:
        arr = as_hwc_array(tensor, self.input_size)
        return self.predict_batch(arr[np.newaxis])[0]


def load_portable(path: str | Path) -> PortableModel:
    """Load an exported artifact for inference.

    Raises CorruptArtifact when the model file is absent or unloadable and
    MissingSidecar when the metadata companion is gone or incomplete.
    """
    model_path = Path(path)
    sidecar = sidecar_path_for(model_path)
    if not model_path.is_file():
        raise CorruptArtifact(f"model file not found: {model_path}")
    if not sidecar.is_file():
        raise MissingSidecar(f"sidecar not found: {sidecar}")
    try:
        metadata = json.loads(sidecar.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingSidecar(f"sidecar {sidecar} is unreadable: {exc}") from exc
    missing = [k for k in SIDECAR_FIELDS if k not in metadata]
    if missing:
        raise MissingSidecar(f"sidecar {sidecar} is missing fields: {missing}")

    import onnxruntime as ort

    try:
        session = ort.InferenceSession(str(model_path), providers=["CPUExecutionProvider"])
    except Exception as exc:
        raise CorruptArtifact(f"cannot load model {model_path}: {exc}") from exc
    return PortableModel(session=session, metadata=metadata, model_path=model_path)


def predict_images(model, images: list[LabeledImage], batch_size: int = 32) -> np.ndarray:
    """Run a model over corpus images, preserving order. Returns (N, 6).

    Works with anything exposing input_size, normalization and
    predict_batch (both the in-framework and portable models do).
    """
    out = []
    for start in range(0, len(images), batch_size):
        chunk = images[start:start + batch_size]
        arrays = np.stack([
            preprocess_file(img.path, model.input_size, model.normalization).data
            for img in chunk
        ])
        out.append(model.predict_batch(arrays))
    if not out:
        return np.zeros((0, len(model.labels)), dtype=np.float32)
    return np.concatenate(out, axis=0)
