"""
Field dump format.

A dump is a pair of files:

``<stem>.json``
    ``{"format": "stokes-field-dump", "version": 1, "grid": {...},
    "components": [...], "dtype": "complex128", "byte_order": "little",
    "layout": "row-major, components outermost, interleaved re/im",
    "normalization": {...}, "name": ...}``
``<stem>.bin``
    The samples as little-endian IEEE-754 doubles, ``(re, im)`` interleaved,
    in C order of the array ``components + grid.shape``.  A vector field on
    a ``4 x 4`` torus therefore stores ``2 * 16`` complex numbers, all of
    component 0 first.

``grid`` is the :meth:`describe` dictionary of a :class:`TorusGrid` or
:class:`SlabGrid`; slab descriptors carry ``height`` and ``n_vertical``.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .field import Field, SlabGrid, TorusGrid

__all__ = ["write_field", "read_field", "grid_from_description"]

FORMAT = "stokes-field-dump"
DTYPE = np.dtype("<c16")


def grid_from_description(desc: dict):
    kind = desc.get("kind")
    if kind == "torus":
        return TorusGrid(tuple(desc["shape"]), tuple(float(x) for x in desc["lengths"]))
    if kind == "slab":
        hor = TorusGrid(tuple(desc["horizontal_shape"]), tuple(float(x) for x in desc["horizontal_lengths"]))
        return SlabGrid(hor, int(desc["n_vertical"]), float(desc["height"]))
    raise ValueError(f"unknown grid kind {kind!r}")


def write_field(field: Field, stem, name: str = "", normalization: dict | None = None) -> tuple:
    """Write ``<stem>.json`` and ``<stem>.bin``; returns the two paths."""
    stem = Path(stem)
    meta = {
        "format": FORMAT,
        "version": 1,
        "name": name,
        "grid": field.grid.describe(),
        "components": list(field.data.shape[: field.rank]),
        "dtype": "complex128",
        "byte_order": "little",
        "layout": "row-major, components outermost, interleaved re/im",
        "normalization": normalization or {"fourier": "c_k = fftn(v) / N"},
    }
    jpath, bpath = stem.with_suffix(".json"), stem.with_suffix(".bin")
    try:
        os.makedirs(stem.parent, exist_ok=True)
        with open(bpath, "wb") as fh:
            fh.write(np.ascontiguousarray(field.data, dtype=DTYPE).tobytes())
        with open(jpath, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write field dump {stem}: {exc}") from exc
    return jpath, bpath


def read_field(stem) -> Field:
    stem = Path(stem)
    jpath, bpath = stem.with_suffix(".json"), stem.with_suffix(".bin")
    try:
        with open(jpath, encoding="utf-8") as fh:
            meta = json.load(fh)
        raw = bpath.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read field dump {stem}: {exc}") from exc
    if meta.get("format") != FORMAT:
        raise ValueError(f"{jpath}: not a field dump")
    grid = grid_from_description(meta["grid"])
    shape = tuple(meta["components"]) + grid.shape
    data = np.frombuffer(raw, dtype=DTYPE)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{bpath}: expected {int(np.prod(shape))} samples, found {data.size}")
    return Field(grid, data.reshape(shape).astype(complex))
