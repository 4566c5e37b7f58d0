"""Low-resolution face identification toolkit.

Pipeline: manifest -> crop-ratio geometry -> resolution matching ->
embeddings -> correlation-distance nearest neighbor -> Rank-k / CMC /
RRSSV / sweep reports.
"""

__version__ = "0.1.0"

from . import errors
from .corpus import (
    ImageRecord,
    Manifest,
    load_manifest,
    partition_by_condition,
    subject_ids,
    write_manifest,
)
from .embedding import (
    BackendDescriptor,
    Embedding,
    EmbeddingBackend,
    EmbeddingSet,
    read_embeddings,
    reference_embed,
    resolve_backend,
    write_embeddings,
)
from .errors import LrfrError
from .evaluation import (
    EvalReport,
    RrssvReport,
    SweepGrid,
    build_report,
    cmc,
    draw_subjects,
    rank_k_ir,
    rrssv,
    sweep,
)
from .geometry import FaceBox, crop_padded, extend_box
from .imaging import (
    ImageBuffer,
    load_image,
    match_resolution,
    resize,
    save_png,
    to_grayscale,
)
from .matcher import (
    BatchIdentification,
    GalleryIndex,
    IdentificationResult,
    build_gallery,
    correlation_distance,
    identify,
    identify_all,
)

__all__ = [
    "__version__",
    "errors",
    "LrfrError",
    "ImageRecord",
    "Manifest",
    "load_manifest",
    "write_manifest",
    "partition_by_condition",
    "subject_ids",
    "FaceBox",
    "extend_box",
    "crop_padded",
    "ImageBuffer",
    "resize",
    "match_resolution",
    "to_grayscale",
    "load_image",
    "save_png",
    "Embedding",
    "EmbeddingSet",
    "BackendDescriptor",
    "EmbeddingBackend",
    "reference_embed",
    "read_embeddings",
    "write_embeddings",
    "resolve_backend",
    "GalleryIndex",
    "IdentificationResult",
    "BatchIdentification",
    "correlation_distance",
    "build_gallery",
    "identify",
    "identify_all",
    "rank_k_ir",
    "cmc",
    "build_report",
    "rrssv",
    "draw_subjects",
    "sweep",
    "EvalReport",
    "RrssvReport",
    "SweepGrid",
]
