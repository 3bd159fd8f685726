"""Reading and writing sampled signals and pair descriptions.

Signals are stored either as CSV (``x,re,im`` columns preceded by a ``#``
line holding the grid as JSON) or in a small little-endian binary format::

    magic  b"DTSG"
    u32    version (1)
    u32    n_samples
    u8     flags (bit 0: periodic, bit 1: complex)
    f64    x0, dx
    f64[n] real parts, then f64[n] imaginary parts if complex

Floats in CSV use the shortest round-trip representation, so both formats are
lossless.
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .signal_core import GridSpec, SampledSignal
from .wavelet_atoms import WaveletPair

__all__ = [
    "SignalFormatError",
    "signal_to_csv",
    "signal_from_csv",
    "write_signal_csv",
    "read_signal_csv",
    "signal_to_bytes",
    "signal_from_bytes",
    "write_signal_binary",
    "read_signal_binary",
    "read_signal",
    "pair_sidecar",
    "write_pair_sidecar",
]

MAGIC = b"DTSG"
VERSION = 1
_HEADER = struct.Struct("<4sIIBdd")


class SignalFormatError(ValueError):
    pass


def _grid_header(sig: SampledSignal) -> dict:
    g = sig.grid
    head = {"n_samples": g.n_samples, "x0": g.x0, "dx": g.dx, "periodic": g.periodic, "complex": not sig.is_real}
    if sig.label:
        head["label"] = sig.label
    return head


def signal_to_csv(sig: SampledSignal) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_grid_header(sig), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "re", "im"])
    s = np.asarray(sig.samples)
    for x, v in zip(sig.grid.x, s):
        w.writerow([repr(float(x)), repr(float(np.real(v))), repr(float(np.imag(v)))])
    return buf.getvalue()


def signal_from_csv(text: str) -> SampledSignal:
    """Parse CSV written by :func:`signal_to_csv`.

    Files without the ``#`` header are accepted when ``x`` is uniformly
    spaced; the grid is then taken as non-periodic.
    """
    lines = text.splitlines()
    head = None
    if lines and lines[0].startswith("#"):
        try:
            head = json.loads(lines[0][1:])
        except json.JSONDecodeError as exc:
            raise SignalFormatError(f"bad metadata line: {exc}") from None
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if not rows or [c.strip() for c in rows[0][:2]] != ["x", "re"]:
        raise SignalFormatError("expected a header row starting with x,re")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise SignalFormatError(str(exc)) from None
    if data.ndim != 2 or data.shape[0] == 0:
        raise SignalFormatError("no samples")
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0)
    if head is None:
        xs = data[:, 0]
        dx = float(xs[1] - xs[0]) if len(xs) > 1 else 1.0
        if len(xs) > 1 and not np.allclose(np.diff(xs), dx, rtol=1e-9, atol=0):
            raise SignalFormatError("x column is not uniformly spaced")
        grid = GridSpec(len(xs), float(xs[0]), dx, periodic=False)
        label = None
    else:
        grid = GridSpec(int(head["n_samples"]), float(head["x0"]), float(head["dx"]), bool(head["periodic"]))
        label = head.get("label")
        if grid.n_samples != len(values):
            raise SignalFormatError(f"header says {grid.n_samples} samples, found {len(values)}")
    is_complex = head.get("complex") if head is not None and "complex" in head else (
        data.shape[1] > 2 and bool(np.any(data[:, 2] != 0))
    )
    if not is_complex:
        values = np.real(values)
    return SampledSignal(values, grid, label=label)


def signal_to_bytes(sig: SampledSignal) -> bytes:
    g = sig.grid
    is_complex = not sig.is_real
    flags = (1 if g.periodic else 0) | (2 if is_complex else 0)
    out = [_HEADER.pack(MAGIC, VERSION, g.n_samples, flags, float(g.x0), float(g.dx))]
    s = np.asarray(sig.samples)
    out.append(np.ascontiguousarray(s.real, dtype="<f8").tobytes())
    if is_complex:
        out.append(np.ascontiguousarray(s.imag, dtype="<f8").tobytes())
    return b"".join(out)


def signal_from_bytes(data: bytes) -> SampledSignal:
    if len(data) < _HEADER.size:
        raise SignalFormatError("truncated header")
    magic, version, n, flags, x0, dx = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SignalFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SignalFormatError(f"unsupported version {version}")
    parts = 2 if flags & 2 else 1
    body = data[_HEADER.size:]
    if len(body) != 8 * n * parts:
        raise SignalFormatError(f"expected {8 * n * parts} payload bytes, found {len(body)}")
    arr = np.frombuffer(body, dtype="<f8").astype(float)
    values = arr[:n] + 1j * arr[n:] if parts == 2 else arr
    return SampledSignal(values, GridSpec(n, x0, dx, periodic=bool(flags & 1)))


PathLike = Union[str, Path]


def write_signal_csv(sig: SampledSignal, path: PathLike) -> None:
    Path(path).write_text(signal_to_csv(sig), encoding="utf-8")


def read_signal_csv(path: PathLike) -> SampledSignal:
    return signal_from_csv(Path(path).read_text(encoding="utf-8"))


def write_signal_binary(sig: SampledSignal, path: PathLike) -> None:
    Path(path).write_bytes(signal_to_bytes(sig))


def read_signal_binary(path: PathLike) -> SampledSignal:
    return signal_from_bytes(Path(path).read_bytes())


def read_signal(path: PathLike) -> SampledSignal:
    """Read either format, sniffing the binary magic."""
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        return signal_from_bytes(raw)
    return signal_from_csv(raw.decode("utf-8"))


def pair_sidecar(pair: WaveletPair) -> str:
    """JSON description of a pair (parameters, flags, measured defects)."""
    return json.dumps({"schema": 1, "pair": pair.describe()}, indent=2, sort_keys=True, default=float)


def write_pair_sidecar(pair: WaveletPair, path: PathLike) -> None:
    Path(path).write_text(pair_sidecar(pair) + "\n", encoding="utf-8")
