"""Extraction jobs: a directory of images in, one IFV1 file out.

Each decodable image becomes one vector whose id is the filename stem.
Preprocessing follows the standard ImageNet evaluation recipe: resize
the short side to 256 (bilinear), center crop 224x224, scale to [0, 1],
then normalize with the ImageNet channel mean and std. The recipe, the
backbone, and the tap are recorded in a JSON sidecar next to the output
so downstream consumers can see exactly how the vectors were produced.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torchvision import transforms

from . import ifv1
from .errors import ExtractorError
from .models import DEFAULT_LAYER, DEFAULT_MODEL, LAYER_DIMS, embed_batch, load_backbone

log = logging.getLogger("embed_extractor")

IMAGE_SUFFIXES = {".bmp", ".gif", ".jpeg", ".jpg", ".pgm", ".png",
                  ".ppm", ".tif", ".tiff", ".webp"}

_NORMALIZE_MEAN = (0.485, 0.456, 0.406)
_NORMALIZE_STD = (0.229, 0.224, 0.225)

_PREPROCESS = transforms.Compose([
    transforms.Resize(256, antialias=True),
    transforms.CenterCrop(224),
    transforms.ToTensor(),
    transforms.Normalize(mean=_NORMALIZE_MEAN, std=_NORMALIZE_STD),
])


@dataclass
class ExtractionJob:
    """One extraction run over an image directory.

    ``weights`` selects the parameter source: ``imagenet`` for the
    torchvision pretrained catalog, ``random`` for a seeded init, or a
    path to a saved state dict. ``seed`` only matters for ``random``.
    """

    image_dir: str | Path
    out_path: str | Path
    model: str = DEFAULT_MODEL
    layer: str = DEFAULT_LAYER
    batch_size: int = 8
    weights: str = "imagenet"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.model:
            raise ExtractorError("model name must be non-empty")
        if self.layer not in LAYER_DIMS:
            raise ExtractorError(
                f"unknown layer {self.layer!r}; choose from {sorted(LAYER_DIMS)}"
            )
        if self.batch_size < 1:
            raise ExtractorError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass
class ExtractionResult:
    """What a finished job produced."""

    out_path: Path
    count: int
    dim: int
    skipped: list[str] = field(default_factory=list)


def discover_images(image_dir: str | Path) -> list[Path]:
    """List candidate image files, sorted by name.

    Only regular files with a known raster suffix count; a repeated stem
    (say ``a.png`` next to ``a.jpg``) is an error because stems become
    vector ids and ids must be unique within one output file.
    """
    root = Path(image_dir)
    if not root.is_dir():
        raise ExtractorError(f"image directory not found: {root}")
    paths = sorted(
        p for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        and not p.name.startswith(".")
    )
    by_stem: dict[str, Path] = {}
    for p in paths:
        if p.stem in by_stem:
            raise ExtractorError(
                f"filename stem collision: {by_stem[p.stem].name} vs {p.name}"
            )
        by_stem[p.stem] = p
    return paths


def _decode(path: Path) -> torch.Tensor | None:
    try:
        with Image.open(path) as img:
            return _PREPROCESS(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        log.warning("skipping undecodable image %s: %s", path.name, exc)
        return None


def run_job(job: ExtractionJob) -> ExtractionResult:
    """Execute a job: decode, embed in batches, write IFV1 plus sidecar.

    Undecodable images are skipped with a warning; an empty result set
    is an error. Single-threaded torch keeps runs reproducible across
    invocations on the same machine.
    """
    paths = discover_images(job.image_dir)
    if not paths:
        raise ExtractorError(f"no images found in {job.image_dir}")

    torch.set_num_threads(1)
    model = load_backbone(job.model, weights=job.weights, seed=job.seed)

    items: list[tuple[str, np.ndarray]] = []
    skipped: list[str] = []
    pending: list[tuple[str, torch.Tensor]] = []

    def flush() -> None:
        if not pending:
            return
        batch = torch.stack([tensor for _, tensor in pending])
        out = embed_batch(model, batch, job.layer).numpy().astype(np.float32)
        items.extend((stem, row) for (stem, _), row in zip(pending, out))
        pending.clear()

    for path in paths:
        tensor = _decode(path)
        if tensor is None:
            skipped.append(path.name)
            continue
        pending.append((path.stem, tensor))
        if len(pending) == job.batch_size:
            flush()
    flush()

    if not items:
        raise ExtractorError(f"no decodable images in {job.image_dir}")

    dim = int(items[0][1].size)
    ifv1.write_vectors(job.out_path, items)
    _write_sidecar(job, dim, len(items), skipped)
    log.info("wrote %d vectors (dim %d) to %s", len(items), dim, job.out_path)
    return ExtractionResult(Path(job.out_path), len(items), dim, skipped)


def _write_sidecar(job: ExtractionJob, dim: int, count: int,
                   skipped: list[str]) -> None:
    meta = {
        "format": "IFV1",
        "count": count,
        "dim": dim,
        "model": job.model,
        "layer": job.layer,
        "weights": job.weights,
        "seed": job.seed if job.weights == "random" else None,
        "skipped": skipped,
        "preprocessing": {
            "resize_short_side": 256,
            "interpolation": "bilinear, antialiased",
            "center_crop": 224,
            "scale": "[0, 1]",
            "normalize_mean": list(_NORMALIZE_MEAN),
            "normalize_std": list(_NORMALIZE_STD),
            "channel_order": "RGB",
        },
    }
    sidecar = Path(str(job.out_path) + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
