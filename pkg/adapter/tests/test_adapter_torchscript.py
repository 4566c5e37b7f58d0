"""Real model-runtime path: a self-built TorchScript module stands in for
user-supplied weights (nothing is bundled or downloaded)."""
import numpy as np
import pytest

torch = pytest.importorskip("torch")

import lrfr
from adapter_helpers import subject_pattern
from lrfr_adapter.config import AdapterConfig
from lrfr_adapter.export import embed_and_export
from lrfr_adapter.formats import ManifestRow
from lrfr_adapter.models import load_embedder


class TinyNet(torch.nn.Module):
    def __init__(self, dim=512):
        super().__init__()
        self.pool = torch.nn.AdaptiveAvgPool2d((8, 8))
        self.fc = torch.nn.Linear(3 * 8 * 8, dim)

    def forward(self, x):
        x = self.pool(x)
        return self.fc(x.flatten(1))


@pytest.fixture(scope="module")
def scripted_model(tmp_path_factory):
    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("model") / "tiny.pt"
    torch.jit.script(TinyNet()).save(str(path))
    return path


def test_torchscript_embedder_loads_and_reports_dim(scripted_model):
    emb = load_embedder(f"torchscript:{scripted_model}", input_size=112)
    assert emb.dim == 512
    batch = np.random.default_rng(0).normal(size=(2, 3, 112, 112)).astype(np.float32)
    out = emb(batch)
    assert out.shape == (2, 512)
    assert out.dtype == np.float32


def test_torchscript_export_round_trip(tmp_path, scripted_model):
    from PIL import Image

    rows = []
    for i in range(6):
        path = tmp_path / f"f{i}.png"
        Image.fromarray(subject_pattern(i)).save(path)
        rows.append(ManifestRow(f"f{i}", f"s{i}", "gallery", "studio", str(path)))

    cfg = AdapterConfig(model=f"torchscript:{scripted_model}", input_size=112, batch_size=4)
    out = tmp_path / "g.emb"
    summary = embed_and_export(rows, cfg, out)
    assert summary.count == 6 and summary.dim == 512

    eset = lrfr.read_embeddings(out)
    assert eset.dim == 512 and len(eset) == 6

    # deterministic-inference contract: repeat within 1e-5 per component
    out2 = tmp_path / "g2.emb"
    embed_and_export(rows, cfg, out2)
    again = lrfr.read_embeddings(out2)
    for a, b in zip(eset.entries, again.entries):
        assert np.allclose(a.vector, b.vector, atol=1e-5)


def test_torchscript_missing_file(tmp_path):
    from lrfr_adapter.models import ModelError

    with pytest.raises(ModelError):
        load_embedder(f"torchscript:{tmp_path / 'ghost.pt'}", input_size=112)
