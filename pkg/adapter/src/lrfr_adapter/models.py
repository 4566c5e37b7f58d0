"""Embedding model loading.

An embedder is a callable mapping a float32 batch of shape
``(n, 3, size, size)`` to float32 embeddings ``(n, dim)``, with a ``dim``
attribute and optionally an ``input_size`` it insists on.

Supported specs:

* ``torchscript:<path>`` - a TorchScript module (requires torch). Weights
  are user-supplied; nothing is bundled or downloaded here.
* ``onnx:<path>`` - an ONNX model (requires onnxruntime).
* ``python:<module>:<attr>`` - import a ready embedder (or zero-argument
  factory) from anywhere on the path.
* ``stub:<dim>`` - deterministic fold-projection embedder with no weights
  at all. It is a plumbing aid for dry runs and tests, not a face model.
"""
from __future__ import annotations

import importlib

import numpy as np


class ModelError(Exception):
    """Model could not be loaded or produced malformed output."""


class StubEmbedder:
    """Weight-free deterministic embedder: folds the input into dim buckets.

    Distinct images map to distinct vectors and identical inputs map to
    identical vectors, which is all the pipeline plumbing needs.
    """

    input_size = None  # accepts any size

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ModelError(f"stub dim must be >= 1, got {dim}")
        self.dim = dim

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        n = batch.shape[0]
        flat = batch.reshape(n, -1).astype(np.float32)
        length = flat.shape[1]
        rows = -(-length // self.dim)  # ceil
        padded = np.zeros((n, rows * self.dim), dtype=np.float32)
        padded[:, :length] = flat
        folded = padded.reshape(n, rows, self.dim)
        weights = np.cos(np.arange(1, rows + 1, dtype=np.float32))[np.newaxis, :, np.newaxis]
        return (folded * weights).sum(axis=1, dtype=np.float32)


class TorchScriptEmbedder:
    def __init__(self, path: str, device: str, probe_size: int) -> None:
        try:
            import torch
        except ImportError as exc:
            raise ModelError(
                "torchscript models need torch installed (pip install lrfr-adapter[torch])"
            ) from exc
        self._torch = torch
        self._device = device
        try:
            self._module = torch.jit.load(path, map_location=device)
        except (OSError, RuntimeError, ValueError) as exc:
            raise ModelError(f"cannot load TorchScript model {path}: {exc}") from exc
        self._module.eval()
        self.input_size = probe_size
        with torch.inference_mode():
            out = self._module(torch.zeros(1, 3, probe_size, probe_size, device=device))
        if out.ndim != 2:
            raise ModelError(f"model output must be (n, dim), got shape {tuple(out.shape)}")
        self.dim = int(out.shape[1])

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        with torch.inference_mode():
            out = self._module(torch.from_numpy(batch).to(self._device))
        return out.cpu().numpy().astype(np.float32)


class OnnxEmbedder:
    def __init__(self, path: str, probe_size: int) -> None:
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise ModelError(
                "onnx models need onnxruntime installed (pip install lrfr-adapter[onnx])"
            ) from exc
        try:
            self._session = ort.InferenceSession(path, providers=["CPUExecutionProvider"])
        except Exception as exc:  # ort raises its own hierarchy
            raise ModelError(f"cannot load ONNX model {path}: {exc}") from exc
        self._input_name = self._session.get_inputs()[0].name
        self.input_size = probe_size
        out = self._session.run(
            None, {self._input_name: np.zeros((1, 3, probe_size, probe_size), np.float32)}
        )[0]
        if out.ndim != 2:
            raise ModelError(f"model output must be (n, dim), got shape {out.shape}")
        self.dim = int(out.shape[1])

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        out = self._session.run(None, {self._input_name: batch})[0]
        return np.asarray(out, dtype=np.float32)


def _import_spec(spec: str):
    module_name, _, attr = spec.partition(":")
    if not module_name or not attr:
        raise ModelError(f"python spec must be python:<module>:<attr>, got python:{spec!r}")
    try:
        obj = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ModelError(f"cannot import {attr!r} from {module_name!r}: {exc}") from exc
    if not hasattr(obj, "dim") and callable(obj):
        obj = obj()  # zero-argument factory
    if not callable(obj) or not hasattr(obj, "dim"):
        raise ModelError(f"{spec!r} is not an embedder (callable with a dim attribute)")
    return obj


def load_embedder(spec: str, input_size: int, device: str = "cpu"):
    """Resolve a model spec string to an embedder instance."""
    kind, _, rest = spec.partition(":")
    if kind == "stub":
        try:
            return StubEmbedder(int(rest))
        except ValueError:
            raise ModelError(f"stub spec must be stub:<dim>, got {spec!r}") from None
    if kind == "torchscript":
        return TorchScriptEmbedder(rest, device, input_size)
    if kind == "onnx":
        return OnnxEmbedder(rest, input_size)
    if kind == "python":
        return _import_spec(rest)
    raise ModelError(
        f"unknown model spec {spec!r}; use torchscript:<path>, onnx:<path>, "
        "python:<module>:<attr>, or stub:<dim>"
    )
