"""Artifact container and plot tables.

Container layout (one ``.npz`` file, uncompressed):

* ``__meta__``: 0-d unicode array holding a JSON object with keys
  ``format`` (``"dbar-dirac"``), ``version`` (int), ``kind`` and free metadata;
* every other entry is a named ``numpy`` array stored with its own dtype and shape.

Plot tables are whitespace-separated text with a ``#`` header line giving the
grid size and half width; values are written with 17 significant digits so
that re-reading reproduces the float64 arrays exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT = "dbar-dirac"
VERSION = 1


class ContainerError(ValueError):
    pass


def save_container(path, kind, arrays: dict, meta: dict | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = {"format": FORMAT, "version": VERSION, "kind": kind, **(meta or {})}
    if "__meta__" in arrays:
        raise ContainerError("'__meta__' is reserved")
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(head, sort_keys=True)), **arrays)
    return path


def load_container(path, kind=None):
    with np.load(path, allow_pickle=False) as f:
        if "__meta__" not in f:
            raise ContainerError(f"{path}: not a {FORMAT} container")
        meta = json.loads(str(f["__meta__"]))
        arrays = {k: f[k] for k in f.files if k != "__meta__"}
    if meta.get("format") != FORMAT:
        raise ContainerError(f"{path}: unknown format {meta.get('format')!r}")
    if meta.get("version", 0) > VERSION:
        raise ContainerError(f"{path}: container version {meta['version']} is newer than {VERSION}")
    if kind is not None and meta.get("kind") != kind:
        raise ContainerError(f"{path}: expected {kind!r}, found {meta.get('kind')!r}")
    return meta, arrays


def save_scattering(path, data):
    meta = {"layout": data.layout.to_dict(), "provenance": data.provenance,
            "truncation_radius": data.truncation_radius}
    return save_container(path, "scattering", {"h_diag": data.h_diag, "h_bd": data.h_bd}, meta)


def load_scattering(path):
    from .forward import SpectralLayout
    from .scattering import ScatteringData
    meta, a = load_container(path, "scattering")
    return ScatteringData(SpectralLayout.from_dict(meta["layout"]), a["h_diag"], a["h_bd"],
                          meta["provenance"], meta["truncation_radius"])


def save_dtn(path, dtn):
    return save_container(path, "dtn", {"matrix": dtn.matrix}, dtn.to_dict())


def load_dtn(path):
    from .phantom import DtNMap
    meta, a = load_container(path, "dtn")
    return DtNMap(a["matrix"], meta["N"], meta["label"], meta["residual"])


# ---------------------------------------------------------------------------
# plot tables

def write_table(path, values, header=""):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.size == 0:
        path.write_text(f"# {header}\n")
        return path
    np.savetxt(path, values, fmt="%.17g", header=header)
    return path


def read_table(path):
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if not rows:
        return np.zeros((0, 0))
    return np.loadtxt(path, ndmin=2)
