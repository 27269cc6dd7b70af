import numpy as np
import pytest
from PIL import Image

from embed_extractor.extract import ExtractionJob, run_job

SEED = 11


def _save_noise(path, width, height, rng):
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)


# exposed as a fixture: tests must not import this module by name, the
# fusion engine's suite has a conftest.py too and the names collide
@pytest.fixture
def save_noise():
    return _save_noise


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Three decodable images, one corrupt file, one wrong-suffix file."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(SEED)
    _save_noise(root / "cat.png", 300, 240, rng)
    _save_noise(root / "dog.jpg", 260, 340, rng)
    _save_noise(root / "eel.png", 224, 224, rng)
    (root / "broken.png").write_bytes(b"not a png at all")
    (root / "notes.txt").write_text("ignored, wrong suffix\n")
    return root


@pytest.fixture(scope="session")
def gap_run(image_dir, tmp_path_factory):
    """One in-process extraction shared by the read-only tests."""
    out = tmp_path_factory.mktemp("gap_out") / "gap.ifv"
    result = run_job(ExtractionJob(image_dir, out, weights="random", seed=7))
    return result, out
