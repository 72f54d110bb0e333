"""On-disk formats for fields and scan tables.

Two field formats are supported:

* CSV with columns (x, re, im) — human-readable, consumed by the figure
  tooling.
* A small binary column format: a fixed header (magic, n, length, name)
  followed by float64 columns (re, im). Strip snapshots use the same
  container with an (n_x, n_z) header.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .spectral import Field, GridSpec

_MAGIC_FIELD = b"WTFLD001"
_MAGIC_STRIP = b"WTSTR001"
_NAME_BYTES = 32


def field_to_csv(u: Field, path, name: str = "field") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        s = np.asarray(u.samples, dtype=complex)
        for x, v in zip(u.grid.x, s):
            w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def field_from_csv(path, length: float | None = None) -> Field:
    path = Path(path)
    xs, re, im = [], [], []
    with path.open() as fh:
        r = csv.reader(fh)
        next(r)
        for row in r:
            xs.append(float(row[0]))
            re.append(float(row[1]))
            im.append(float(row[2]))
    n = len(xs)
    if length is None:
        length = n * (xs[1] - xs[0])
    grid = GridSpec(n, length=length)
    samples = np.asarray(re) + 1j * np.asarray(im)
    if np.max(np.abs(samples.imag), initial=0.0) == 0.0:
        samples = samples.real
    return Field(grid, samples=samples)


def _pack_name(name: str) -> bytes:
    b = name.encode("utf-8")[:_NAME_BYTES]
    return b + b"\0" * (_NAME_BYTES - len(b))


def field_to_binary(u: Field, path, name: str = "field") -> None:
    path = Path(path)
    s = np.asarray(u.samples, dtype=complex)
    with path.open("wb") as fh:
        fh.write(_MAGIC_FIELD)
        fh.write(struct.pack("<qd", u.grid.n_points, u.grid.length))
        fh.write(_pack_name(name))
        s.real.astype("<f8").tofile(fh)
        s.imag.astype("<f8").tofile(fh)


def field_from_binary(path) -> tuple[Field, str]:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC_FIELD:
            raise ValueError(f"{path}: not a field file")
        n, length = struct.unpack("<qd", fh.read(16))
        name = fh.read(_NAME_BYTES).rstrip(b"\0").decode("utf-8")
        re = np.fromfile(fh, dtype="<f8", count=n)
        im = np.fromfile(fh, dtype="<f8", count=n)
    samples = re + 1j * im if np.max(np.abs(im), initial=0.0) else re
    return Field(GridSpec(n, length=length), samples=samples), name


def strip_to_binary(values: np.ndarray, length: float, path, name: str = "strip") -> None:
    """Write a (n_z, n_x) strip snapshot."""
    values = np.asarray(values, dtype=complex)
    n_z, n_x = values.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_MAGIC_STRIP)
        fh.write(struct.pack("<qqd", n_x, n_z, length))
        fh.write(_pack_name(name))
        values.real.astype("<f8").tofile(fh)
        values.imag.astype("<f8").tofile(fh)


def strip_from_binary(path) -> tuple[np.ndarray, float, str]:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC_STRIP:
            raise ValueError(f"{path}: not a strip file")
        n_x, n_z, length = struct.unpack("<qqd", fh.read(24))
        name = fh.read(_NAME_BYTES).rstrip(b"\0").decode("utf-8")
        re = np.fromfile(fh, dtype="<f8", count=n_x * n_z).reshape(n_z, n_x)
        im = np.fromfile(fh, dtype="<f8", count=n_x * n_z).reshape(n_z, n_x)
    vals = re + 1j * im if np.max(np.abs(im), initial=0.0) else re
    return vals, length, name


def write_scan_csv(path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating)) else v
                        for v in row])


def read_scan_csv(path) -> tuple[list[str], list[list[float]]]:
    with Path(path).open() as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, rows


def write_json(path, payload: dict) -> None:
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)
