"""Canonical waste classes shared by every stage of the pipeline.

The order is alphabetical and fixed for the lifetime of any artifact:
cardboard=0, glass=1, metal=2, paper=3, plastic=4, trash=5.
"""

from __future__ import annotations

from dataclasses import dataclass

CLASS_NAMES: tuple[str, ...] = ("cardboard", "glass", "metal", "paper", "plastic", "trash")
NUM_CLASSES = len(CLASS_NAMES)


class UnknownLabel(ValueError):
    """A class name or index outside the canonical six."""


@dataclass(frozen=True, order=True)
class ClassLabel:
    index: int
    name: str


CLASS_LABELS: tuple[ClassLabel, ...] = tuple(
    ClassLabel(i, n) for i, n in enumerate(CLASS_NAMES)
)

_BY_NAME = {label.name: label for label in CLASS_LABELS}


def label_from_name(name: str) -> ClassLabel:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownLabel(f"unknown class name {name!r}; expected one of {CLASS_NAMES}") from None


def label_from_index(index: int) -> ClassLabel:
    if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < NUM_CLASSES:
        raise UnknownLabel(f"class index must be an integer in 0..{NUM_CLASSES - 1}, got {index!r}")
    return CLASS_LABELS[index]
