import pytest

from pll_exporter.export import export_model
from pll_exporter.tiny import create_demo_checkpoint


@pytest.fixture(scope="session")
def masked_export(tmp_path_factory):
    root = tmp_path_factory.mktemp("masked")
    create_demo_checkpoint(root / "ckpt", "masked", seed=3)
    manifest = export_model(root / "ckpt", "masked", root / "export")
    return root / "export", manifest


@pytest.fixture(scope="session")
def causal_export(tmp_path_factory):
    root = tmp_path_factory.mktemp("causal")
    create_demo_checkpoint(root / "ckpt", "causal", seed=4)
    manifest = export_model(root / "ckpt", "causal", root / "export")
    return root / "export", manifest
