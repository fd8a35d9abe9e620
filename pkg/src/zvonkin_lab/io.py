"""Flat binary containers for fields and path ensembles.

Both formats are a 4-byte magic, a little-endian uint64 header length, a
UTF-8 JSON header, then raw little-endian float64 payload.  Writes are
deterministic: identical objects produce identical bytes.

.fld  spectral fields; payload is (re, im) pairs per coefficient, slices
      then components then row-major frequency order (numpy fft layout).
.ens  path ensembles; payload is the concatenation of the arrays listed in
      the header, each path-major (path index is the leading axis).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .grid import SpectralField, TimeField, TorusGrid

_FLD_MAGIC = b"FLD1"
_ENS_MAGIC = b"ENS1"


def _write_container(path, magic, header: dict, payloads):
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in payloads:
            fh.write(np.ascontiguousarray(arr).tobytes())


def _read_container(path, magic):
    with open(path, "rb") as fh:
        if fh.read(4) != magic:
            raise ValueError(f"{path}: bad magic, expected {magic!r}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        body = fh.read()
    return header, body


def write_field(path, f):
    """Write a SpectralField or TimeField to a .fld file."""
    grid = f.grid
    is_time = isinstance(f, TimeField)
    header = {
        "format": "fld1",
        "d": grid.d,
        "N": grid.N,
        "L": grid.L,
        "T": grid.T,
        "K": grid.K if is_time else 0,
        "arity": f.arity,
        "interp": f.interp if is_time else None,
        "layout": "fft-standard",
    }
    _write_container(path, _FLD_MAGIC, header, [f.coeff.astype("<c16")])


def read_field(path, grid=None):
    """Read a .fld file.  Returns TimeField if it carries slices, else SpectralField."""
    header, body = _read_container(path, _FLD_MAGIC)
    if grid is None:
        grid = TorusGrid(
            d=header["d"], N=header["N"], L=header["L"], T=header["T"], K=header["K"] or 1
        )
    coeff = np.frombuffer(body, dtype="<c16").astype(np.complex128)
    d, N = header["d"], header["N"]
    comp = {"scalar": (), "vector": (d,), "matrix": (d, d)}[header["arity"]]
    if header["K"]:
        shape = (header["K"] + 1,) + comp + (N,) * d
        return TimeField(grid, header["arity"], coeff.reshape(shape), header["interp"])
    shape = comp + (N,) * d
    return SpectralField(grid, header["arity"], coeff.reshape(shape))


def write_ensemble(path, manifest: dict, arrays: dict):
    """Write named float64 arrays with a manifest to a .ens file."""
    names = sorted(arrays)
    header = dict(manifest)
    header["format"] = "ens1"
    header["arrays"] = [
        {"name": n, "shape": list(arrays[n].shape), "dtype": "<f8"} for n in names
    ]
    _write_container(path, _ENS_MAGIC, header, [np.asarray(arrays[n], "<f8") for n in names])


def read_ensemble(path):
    """Read a .ens file; returns (manifest, {name: array})."""
    header, body = _read_container(path, _ENS_MAGIC)
    arrays = {}
    off = 0
    for spec in header["arrays"]:
        n = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(body, dtype="<f8", count=n, offset=off)
        arrays[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
        off += n * 8
    meta = {k: v for k, v in header.items() if k != "arrays"}
    return meta, arrays
