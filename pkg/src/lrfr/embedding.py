"""Embedding types, the deterministic reference embedder, and binary file I/O.

Embedding file format (little-endian, no padding or alignment)::

    magic   8 bytes   b"LRFR-EMB"
    version u16       currently 1
    dim     u32       vector length, constant for the whole file
    count   u64       number of records
    then `count` records of:
        id_len   u16
        id       UTF-8 bytes
        subj_len u16
        subj     UTF-8 bytes
        vector   dim x f32

Round trips are bit-exact: float32 bit patterns are written and read back
unchanged.

The reference embedder is intentionally crude. It exists so every pipeline
property (geometry, resolution matching, matching, evaluation) can be
exercised hermetically, with no model weights; it is not expected to reach
deep-model accuracies. Deep models enter through the ``file:`` backend,
which serves precomputed vectors by image_id.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    BadMagic,
    DimMismatch,
    MissingEmbedding,
    TruncatedFile,
    UnknownBackend,
    VersionUnsupported,
)
from .imaging import ImageBuffer, resize, to_grayscale

MAGIC = b"LRFR-EMB"
FORMAT_VERSION = 1

REFERENCE_DIM = 256
_REFERENCE_SIDE = 16


@dataclass(frozen=True, eq=False)
class Embedding:
    """Identity-tagged float32 feature vector."""

    image_id: str
    subject_id: str
    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.ascontiguousarray(self.vector, dtype="<f4")
        if vec.ndim != 1:
            raise DimMismatch(f"vector must be 1-D, got shape {vec.shape}")
        object.__setattr__(self, "vector", vec)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.subject_id == other.subject_id
            and self.vector.shape == other.vector.shape
            and self.vector.tobytes() == other.vector.tobytes()
        )


@dataclass(frozen=True)
class BackendDescriptor:
    """Metadata for whatever produced a set of embeddings."""

    name: str
    input_size: int  # 0 when not applicable (precomputed vectors)
    dim: int
    training_data: str = ""


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Uniform-dimension collection of embeddings with unique image ids.

    ``backend`` is in-memory provenance only; the on-disk format does not
    carry it, so equality ignores it.
    """

    dim: int
    entries: tuple[Embedding, ...]
    backend: BackendDescriptor | None = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.dim < 1:
            raise DimMismatch(f"dim must be >= 1, got {self.dim}")
        seen: set[str] = set()
        for e in self.entries:
            if e.vector.shape != (self.dim,):
                raise DimMismatch(
                    f"embedding {e.image_id!r} has dim {e.vector.shape[0]}, set dim is {self.dim}"
                )
            if not np.isfinite(e.vector).all():
                raise ValueError(f"embedding {e.image_id!r} contains NaN or Inf")
            if e.image_id in seen:
                raise ValueError(f"duplicate image_id {e.image_id!r} in embedding set")
            seen.add(e.image_id)

    def __len__(self) -> int:
        return len(self.entries)

    def by_image_id(self) -> dict[str, Embedding]:
        return {e.image_id: e for e in self.entries}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return self.dim == other.dim and self.entries == other.entries


def reference_embed(img: ImageBuffer) -> np.ndarray:
    """Deterministic 256-dim pixel-statistics embedding.

    Pipeline: grayscale -> 16x16 area resize -> row-major flatten ->
    subtract the vector's own mean. The output mean is 0 within 1e-5.
    """
    small = resize(to_grayscale(img), _REFERENCE_SIDE, _REFERENCE_SIDE, "area")
    flat = small.pixels.reshape(-1).astype(np.float64)
    return (flat - flat.mean()).astype(np.float32)


def write_embeddings(eset: EmbeddingSet, path: str | Path) -> None:
    """Serialize an EmbeddingSet; see the module docstring for the layout."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HIQ", FORMAT_VERSION, eset.dim, len(eset.entries)))
        for e in eset.entries:
            id_bytes = e.image_id.encode("utf-8")
            subj_bytes = e.subject_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<H", len(subj_bytes)))
            fh.write(subj_bytes)
            fh.write(e.vector.tobytes())


def read_embeddings(path: str | Path) -> EmbeddingSet:
    """Parse an embedding file back into an EmbeddingSet, bit-exactly."""
    from .errors import LrfrError

    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise LrfrError(f"cannot read embedding file {path}: {exc}") from exc
    if len(data) < len(MAGIC):
        raise TruncatedFile(f"{path}: shorter than magic")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    offset = len(MAGIC)

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise TruncatedFile(f"{path}: truncated while reading {what}")
        chunk = data[offset : offset + n]
        offset += n
        return chunk

    version, dim, count = struct.unpack("<HIQ", take(14, "header"))
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: version {version}, reader supports {FORMAT_VERSION}")
    vec_bytes = dim * 4
    entries = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", take(2, "id length"))
        image_id = take(id_len, "id").decode("utf-8")
        (subj_len,) = struct.unpack("<H", take(2, "subject length"))
        subject_id = take(subj_len, "subject").decode("utf-8")
        vector = np.frombuffer(take(vec_bytes, f"vector of {image_id!r}"), dtype="<f4")
        entries.append(Embedding(image_id, subject_id, vector))
    if offset != len(data):
        raise TruncatedFile(f"{path}: {len(data) - offset} trailing bytes after {count} records")
    return EmbeddingSet(dim=dim, entries=tuple(entries))


class EmbeddingBackend:
    """Callable contract around an embedding function.

    Image backends take an ImageBuffer; file-backed backends take an
    image_id (``by_id`` is True). Every returned vector is checked against
    the declared dim at runtime.
    """

    def __init__(
        self,
        descriptor: BackendDescriptor,
        fn: Callable[..., np.ndarray],
        by_id: bool = False,
    ) -> None:
        self.descriptor = descriptor
        self.by_id = by_id
        self._fn = fn

    def __call__(self, arg) -> np.ndarray:
        out = np.asarray(self._fn(arg), dtype=np.float32)
        if out.shape != (self.descriptor.dim,):
            raise DimMismatch(
                f"backend {self.descriptor.name!r} returned shape {out.shape}, "
                f"declared dim {self.descriptor.dim}"
            )
        return out


def _reference_backend() -> EmbeddingBackend:
    desc = BackendDescriptor(
        name="reference",
        input_size=_REFERENCE_SIDE,
        dim=REFERENCE_DIM,
        training_data="none (deterministic pixel statistics)",
    )
    return EmbeddingBackend(desc, reference_embed)


def _file_backend(path: str) -> EmbeddingBackend:
    eset = read_embeddings(path)
    table = eset.by_image_id()

    def lookup(image_id: str) -> np.ndarray:
        try:
            return table[image_id].vector
        except KeyError:
            raise MissingEmbedding(f"{path}: no embedding for image_id {image_id!r}") from None

    desc = BackendDescriptor(
        name=f"file:{path}", input_size=0, dim=eset.dim, training_data="precomputed"
    )
    return EmbeddingBackend(desc, lookup, by_id=True)


BackendRegistry = dict[str, Callable[[], EmbeddingBackend]]

DEFAULT_REGISTRY: BackendRegistry = {"reference": _reference_backend}


def resolve_backend(name: str, registry: BackendRegistry | None = None) -> EmbeddingBackend:
    """Look up a backend by name.

    Built-ins: ``reference`` and ``file:<path>``. Anything else must be in
    the registry, or UnknownBackend is raised.
    """
    reg = DEFAULT_REGISTRY if registry is None else registry
    if name.startswith("file:"):
        return _file_backend(name[len("file:"):])
    if name in reg:
        return reg[name]()
    raise UnknownBackend(f"no backend named {name!r}; built-ins are 'reference' and 'file:<path>'")
