"""Image embedding extraction into the IFV1 vector container.

Runs a directory of images through a pretrained VGG-family network and
writes one dense vector per image, keyed by filename stem. The output is
plain IFV1 and carries no dependency on any particular consumer.
"""

from .errors import ExtractorError
from .extract import ExtractionJob, discover_images, run_job
from .ifv1 import read_vectors, write_vectors

__version__ = "0.1.0"

__all__ = [
    "ExtractionJob",
    "ExtractorError",
    "discover_images",
    "read_vectors",
    "run_job",
    "write_vectors",
]
