"""Deep-learning bridge for the lrfr toolkit.

Detects faces (box + five landmarks) and exports deep-model embeddings in
lrfr's bit-exact manifest CSV and embedding binary formats. Crop-ratio
geometry and resolution matching stay in the toolkit; this package only
detects, normalizes, and runs models.
"""

__version__ = "0.1.0"

from .config import AdapterConfig
from .detect import Detection, DetectorError, detect_rows, load_detector
from .export import ExportSummary, embed_and_export
from .formats import (
    EMB_MAGIC,
    MANIFEST_HEADER,
    ManifestRow,
    read_manifest_rows,
    resolve_row_paths,
    write_embedding_file,
    write_manifest_rows,
)
from .models import ModelError, StubEmbedder, load_embedder
from .preprocess import ImageLoadError, load_rgb, normalize_samples, preprocess

__all__ = [
    "__version__",
    "AdapterConfig",
    "Detection",
    "DetectorError",
    "detect_rows",
    "load_detector",
    "ExportSummary",
    "embed_and_export",
    "ManifestRow",
    "MANIFEST_HEADER",
    "EMB_MAGIC",
    "read_manifest_rows",
    "resolve_row_paths",
    "write_manifest_rows",
    "write_embedding_file",
    "ModelError",
    "StubEmbedder",
    "load_embedder",
    "ImageLoadError",
    "load_rgb",
    "normalize_samples",
    "preprocess",
]
