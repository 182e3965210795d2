"""GFA arrays: one JSON header line, a newline, then the raw little-endian payload.

Complex arrays store interleaved (real, imag) float64 pairs. An optional
JSON sidecar (``<path>.json``) carries provenance.
"""

import json
from pathlib import Path

import numpy as np

from .errors import GridMismatch
from .grid import PHYSICAL, GridFunction, PeriodicGrid

VERSION = 1


def write_gfa(path, array, L, n=None, sidecar=None):
    """Write ``array`` (real or complex) in GFA layout; returns the header dict."""
    arr = np.asarray(array)
    is_complex = np.iscomplexobj(arr)
    header = {
        "version": VERSION,
        "n": int(arr.ndim if n is None else n),
        "shape": [int(s) for s in arr.shape],
        "L": float(L),
        "dtype": "f64",
        "complex": bool(is_complex),
        "layout": "row-major",
    }
    data = np.ascontiguousarray(arr, dtype="<c16" if is_complex else "<f8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(data.tobytes(order="C"))
    if sidecar is not None:
        write_sidecar(path, sidecar)
    return header


def read_gfa(path):
    """Return ``(header, array)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        payload = fh.read()
    if header.get("version") != VERSION or header.get("dtype") != "f64" or header.get("layout") != "row-major":
        raise ValueError(f"unsupported GFA header {header}")
    dt = "<c16" if header["complex"] else "<f8"
    shape = tuple(header["shape"])
    arr = np.frombuffer(payload, dtype=dt)
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"payload holds {arr.size} values, header shape {shape} needs {int(np.prod(shape))}")
    return header, arr.reshape(shape).copy()


def write_sidecar(path, meta):
    Path(str(path) + ".json").write_text(json.dumps(meta, sort_keys=True, indent=2, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, range):
        return [o.start, o.stop - 1]
    raise TypeError(f"not serialisable: {type(o).__name__}")


def save_function(path, f, sidecar=None):
    f = f.physical()
    return write_gfa(path, f.samples, f.grid.L, f.grid.n, sidecar)


def load_function(path, grid=None):
    header, arr = read_gfa(path)
    n = header["n"]
    if arr.ndim != n or len(set(arr.shape)) != 1:
        raise GridMismatch(f"GFA array of shape {arr.shape} is not a cubic {n}-d grid")
    g = PeriodicGrid(n, L=header["L"], N=arr.shape[0])
    if grid is not None and grid != g:
        raise GridMismatch(f"file grid {g} differs from {grid}")
    return GridFunction(g, arr, PHYSICAL)
