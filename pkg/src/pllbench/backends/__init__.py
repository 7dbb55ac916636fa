"""Scoring backends: the deterministic reference and the exported-graph runner."""

from .reference import ReferenceBackend, ReferenceBackendConfig

__all__ = ["ReferenceBackend", "ReferenceBackendConfig", "NeuralBackend", "NeuralBackendConfig", "load_export"]


def __getattr__(name):
    # neural backend pulls in torch; import it only on demand
    if name in ("NeuralBackend", "NeuralBackendConfig", "load_export"):
        from . import neural

        return getattr(neural, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
