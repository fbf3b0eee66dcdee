"""Bridge from pretrained vision-language encoders to gapkit's file formats."""

from .export import (
    ExportManifest,
    ExporterError,
    ManifestError,
    ModelLoadError,
    UnreadableInput,
    export_embeddings,
)
from .formats import write_emb1, write_lbl1

__all__ = [
    "ExportManifest",
    "ExporterError",
    "ManifestError",
    "ModelLoadError",
    "UnreadableInput",
    "export_embeddings",
    "write_emb1",
    "write_lbl1",
]
