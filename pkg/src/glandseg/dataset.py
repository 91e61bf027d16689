"""Dataset ingestion: pair images with their annotation rasters and verify
everything decodes before the pipeline starts.

Layout convention: a dataset directory holds images (<id>.bmp/.png) and
annotation label maps named <id>_anno.<ext>. When filenames carry split
prefixes ("train_3.bmp"), passing the split name selects just those files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IngestError
from .io import load_annotation, load_rgb

IMAGE_EXTENSIONS = {".bmp", ".png", ".tif", ".tiff", ".jpg", ".jpeg"}
ANNOTATION_TAG = "_anno"


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    image_path: Path
    annotation_path: Path | None


@dataclass(frozen=True)
class DatasetIndex:
    root: Path
    split: str
    entries: tuple[DatasetEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


def _image_size(path: Path) -> tuple[int, int]:
    try:
        with Image.open(path) as im:
            return im.size
    except (OSError, UnidentifiedImageError) as exc:
        raise IngestError(f"cannot decode {path}: {exc}") from exc


def ingest_dataset(root, split: str = "train",
                   require_annotations: bool | None = None) -> DatasetIndex:
    """Index a dataset directory.

    Verifies that every image decodes, that annotations (when present)
    decode and match their image's size, and that annotations exist when
    required (default: required for the train split). Entries come back
    sorted by id.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"dataset directory not found: {root}")
    if require_annotations is None:
        require_annotations = split == "train"

    candidates = sorted(
        p for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        and not p.stem.endswith(ANNOTATION_TAG)
    )
    prefix = f"{split.lower()}_"
    prefixed = [p for p in candidates if p.stem.lower().startswith(prefix)]
    if prefixed:
        candidates = prefixed
    if not candidates:
        raise IngestError(f"no images for split '{split}' under {root}")

    entries: list[DatasetEntry] = []
    seen: dict[str, Path] = {}
    for image_path in candidates:
        entry_id = image_path.stem
        if entry_id in seen:
            raise IngestError(
                f"duplicate id '{entry_id}': {seen[entry_id]} and {image_path}"
            )
        seen[entry_id] = image_path
        anno_path = None
        for ext in sorted(IMAGE_EXTENSIONS):
            candidate = image_path.with_name(f"{entry_id}{ANNOTATION_TAG}{ext}")
            if candidate.exists():
                anno_path = candidate
                break
        if anno_path is None and require_annotations:
            raise IngestError(f"missing annotation for {image_path}")
        size = _image_size(image_path)
        if anno_path is not None:
            anno_size = _image_size(anno_path)
            if anno_size != size:
                raise IngestError(
                    f"annotation size {anno_size} does not match image size "
                    f"{size} for {image_path}"
                )
        entries.append(DatasetEntry(entry_id, image_path, anno_path))
    return DatasetIndex(root, split, tuple(entries))


def load_entry(entry: DatasetEntry) -> tuple[np.ndarray, np.ndarray | None]:
    """Decode one entry's image (and annotation when present)."""
    img = load_rgb(entry.image_path)
    anno = None
    if entry.annotation_path is not None:
        anno = load_annotation(entry.annotation_path)
        if anno.shape != img.shape[:2]:
            raise IngestError(
                f"annotation shape {anno.shape} does not match image "
                f"{img.shape[:2]} for {entry.image_path}"
            )
    return img, anno
