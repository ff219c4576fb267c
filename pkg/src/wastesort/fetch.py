"""Dataset acquisition: download (or copy) an archive, verify, extract, arrange.

The default source is the public six-class corpus archive. For air-gapped
machines the URL may be a `file://` URL or a plain filesystem path to an
already-downloaded zip; everything after the download step is identical.
"""

from __future__ import annotations

import hashlib
import logging
import shutil
import tempfile
import urllib.error
import urllib.request
import zipfile
from pathlib import Path

from .dataset import IMAGE_EXTENSIONS
from .labels import CLASS_NAMES

logger = logging.getLogger(__name__)

DEFAULT_DATASET_URL = (
    "https://huggingface.co/datasets/garythung/trashnet/resolve/main/dataset-resized.zip"
)


class NetworkFailure(RuntimeError):
    """The archive could not be downloaded."""


class ChecksumMismatch(RuntimeError):
    """Downloaded archive does not match the expected sha256."""


class ExtractFailure(RuntimeError):
    """The archive is unreadable, unsafe, or not shaped like the corpus."""


def _sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _obtain_archive(url: str, scratch: Path) -> Path:
    """Download http(s)/file URLs; pass plain local paths through."""
    if url.startswith(("http://", "https://", "file://")):
        target = scratch / "corpus.zip"
        logger.info("downloading %s", url)
        try:
            with urllib.request.urlopen(url, timeout=120) as response, open(target, "wb") as out:
                shutil.copyfileobj(response, out)
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise NetworkFailure(f"cannot download {url}: {exc}") from exc
        return target
    local = Path(url)
    if not local.is_file():
        raise NetworkFailure(f"archive not found: {local}")
    return local


def _extract_zip(archive: Path, extract_root: Path) -> None:
    resolved_root = extract_root.resolve()
    try:
        with zipfile.ZipFile(archive) as zf:
            for member in zf.namelist():
                destination = (extract_root / member).resolve()
                if not destination.is_relative_to(resolved_root):
                    raise ExtractFailure(f"archive member escapes extraction root: {member}")
            zf.extractall(extract_root)
    except zipfile.BadZipFile as exc:
        raise ExtractFailure(f"{archive} is not a valid zip archive: {exc}") from exc


def _find_class_root(extract_root: Path) -> Path:
    """Locate the directory holding all six class subdirectories."""
    candidates = [extract_root]
    candidates += [p for p in sorted(extract_root.rglob("*")) if p.is_dir()]
    for candidate in candidates:
        names = {c.name for c in candidate.iterdir() if c.is_dir()}
        if all(name in names for name in CLASS_NAMES):
            return candidate
    raise ExtractFailure(
        f"extracted archive does not contain the class directories {list(CLASS_NAMES)}"
    )


def _count_images(class_dir: Path) -> int:
    return sum(
        1 for p in class_dir.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS and not p.name.startswith(".")
    )


def fetch_corpus(
    dest: str | Path,
    url: str = DEFAULT_DATASET_URL,
    sha256: str | None = None,
) -> dict[str, int]:
    """Fetch and arrange the corpus under dest/<class>/. Returns per-class counts.

    Idempotent-ish: refuses to clobber an existing class directory so a
    stray re-run cannot silently merge two corpus versions.
    """
    dest = Path(dest)
    existing = [name for name in CLASS_NAMES if (dest / name).exists()]
    if existing:
        raise ExtractFailure(
            f"destination {dest} already contains {existing}; remove it to re-fetch"
        )

    with tempfile.TemporaryDirectory(prefix="corpus-fetch-") as scratch_str:
        scratch = Path(scratch_str)
        archive = _obtain_archive(url, scratch)

        if sha256 is not None:
            actual = _sha256_of(archive)
            if actual != sha256.lower():
                raise ChecksumMismatch(f"sha256 {actual} != expected {sha256.lower()}")

        extract_root = scratch / "extracted"
        extract_root.mkdir()
        _extract_zip(archive, extract_root)
        class_root = _find_class_root(extract_root)

        dest.mkdir(parents=True, exist_ok=True)
        for name in CLASS_NAMES:
            shutil.move(str(class_root / name), str(dest / name))

    counts = {name: _count_images(dest / name) for name in CLASS_NAMES}
    logger.info("corpus ready under %s (%s)", dest,
                ", ".join(f"{k}={v}" for k, v in counts.items()))
    return counts
