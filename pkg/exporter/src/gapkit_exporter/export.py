"""Batched encoder inference over an image folder or a prompt list.

This package is I/O only: it loads a CLIP-style checkpoint, embeds the
inputs, L2-normalizes the rows (the usual encoder convention, and what the
downstream analysis assumes), and writes EMB1/LBL1 files. No gap math
happens here.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .formats import write_emb1, write_lbl1

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


class ExporterError(Exception):
    pass


class ManifestError(ExporterError):
    """The manifest is malformed or inconsistent."""


class ModelLoadError(ExporterError):
    """The encoder checkpoint could not be loaded."""


class UnreadableInput(ExporterError):
    """An input image or text file could not be read."""


_MANIFEST_KEYS = {
    "model",
    "images_dir",
    "texts_file",
    "prompt_template",
    "out_embeddings",
    "out_labels",
    "batch_size",
}


@dataclass(frozen=True)
class ExportManifest:
    """What to embed and where the results go.

    Exactly one of images_dir / texts_file is set. prompt_template is
    applied to every text line ("{}" is the line itself). out_labels is
    only meaningful for texts: line i gets class label i.
    """

    model: str
    images_dir: str | None
    texts_file: str | None
    prompt_template: str
    out_embeddings: str
    out_labels: str | None
    batch_size: int

    @classmethod
    def from_json(cls, path: str) -> "ExportManifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ManifestError(f"{path}: manifest must be a JSON object")
        unknown = set(raw) - _MANIFEST_KEYS
        if unknown:
            raise ManifestError(f"{path}: unknown manifest keys: {sorted(unknown)}")
        for key in ("model", "out_embeddings"):
            if key not in raw:
                raise ManifestError(f"{path}: missing required key {key!r}")
        has_images = "images_dir" in raw
        has_texts = "texts_file" in raw
        if has_images == has_texts:
            raise ManifestError(f"{path}: set exactly one of images_dir / texts_file")
        if raw.get("out_labels") and has_images:
            raise ManifestError(f"{path}: out_labels is only supported with texts_file")
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return None if p is None else os.path.join(base, p)

        batch_size = int(raw.get("batch_size", 16))
        if batch_size < 1:
            raise ManifestError(f"{path}: batch_size must be >= 1")
        return cls(
            model=raw["model"],
            images_dir=resolve(raw.get("images_dir")),
            texts_file=resolve(raw.get("texts_file")),
            prompt_template=raw.get("prompt_template", "{}"),
            out_embeddings=resolve(raw["out_embeddings"]),
            out_labels=resolve(raw.get("out_labels")),
            batch_size=batch_size,
        )


def _load_model(identifier: str):
    try:
        import torch
        from transformers import CLIPModel, CLIPProcessor
    except ImportError as exc:  # pragma: no cover
        raise ModelLoadError(f"transformers/torch unavailable: {exc}") from exc
    try:
        model = CLIPModel.from_pretrained(identifier)
        processor = CLIPProcessor.from_pretrained(identifier)
    except Exception as exc:
        raise ModelLoadError(f"cannot load encoder {identifier!r}: {exc}") from exc
    model.eval()
    return torch, model, processor


def _features_to_array(out) -> np.ndarray:
    # transformers >= 5 returns the full output object; older versions a tensor
    tensor = out.pooler_output if hasattr(out, "pooler_output") else out
    return tensor.detach().cpu().numpy().astype(np.float32)


def _list_images(images_dir: str) -> list[str]:
    try:
        names = sorted(os.listdir(images_dir))
    except OSError as exc:
        raise UnreadableInput(f"cannot list {images_dir}: {exc}") from exc
    paths = [
        os.path.join(images_dir, n)
        for n in names
        if n.lower().endswith(IMAGE_SUFFIXES)
    ]
    if not paths:
        raise UnreadableInput(f"no images with suffixes {IMAGE_SUFFIXES} in {images_dir}")
    return paths


def _read_texts(texts_file: str, template: str) -> list[str]:
    try:
        with open(texts_file, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise UnreadableInput(f"cannot read {texts_file}: {exc}") from exc
    if not lines:
        raise UnreadableInput(f"{texts_file} has no non-empty lines")
    return [template.format(line) for line in lines]


def _normalize(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return rows / norms


def export_embeddings(manifest: ExportManifest) -> dict:
    """Embed the manifest's inputs and write EMB1 (and optional LBL1) files.

    Returns a summary dict with the row count, embedding width, and output
    paths. Rows are unit-norm float32.
    """
    torch, model, processor = _load_model(manifest.model)

    batches = []
    if manifest.images_dir is not None:
        from PIL import Image, UnidentifiedImageError

        paths = _list_images(manifest.images_dir)
        n_items = len(paths)
        with torch.no_grad():
            for start in range(0, n_items, manifest.batch_size):
                chunk = paths[start : start + manifest.batch_size]
                images = []
                for p in chunk:
                    try:
                        with Image.open(p) as im:
                            images.append(im.convert("RGB"))
                    except (OSError, UnidentifiedImageError) as exc:
                        raise UnreadableInput(f"cannot read image {p}: {exc}") from exc
                inputs = processor(images=images, return_tensors="pt")
                batches.append(_features_to_array(model.get_image_features(**inputs)))
        labels = None
    else:
        texts = _read_texts(manifest.texts_file, manifest.prompt_template)
        n_items = len(texts)
        with torch.no_grad():
            for start in range(0, n_items, manifest.batch_size):
                chunk = texts[start : start + manifest.batch_size]
                inputs = processor(text=chunk, return_tensors="pt", padding=True)
                batches.append(_features_to_array(model.get_text_features(**inputs)))
        labels = np.arange(n_items, dtype=np.int64)

    rows = _normalize(np.concatenate(batches, axis=0))
    assert rows.shape[0] == n_items
    write_emb1(rows, manifest.out_embeddings)
    summary = {
        "rows": int(rows.shape[0]),
        "dim": int(rows.shape[1]),
        "embeddings": manifest.out_embeddings,
    }
    if manifest.out_labels is not None and labels is not None:
        write_lbl1(labels, manifest.out_labels)
        summary["labels"] = manifest.out_labels
    return summary
