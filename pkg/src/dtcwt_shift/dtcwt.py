"""Dual-tree complex wavelet coefficients by direct inner products.

Coefficients are ``a_j[k] = <f, psi_{j,k}>``, ``b_j[k] = <f, psi'_{j,k}>`` and
``c_j[k] = (a_j[k] - i b_j[k]) / 2``.  They are evaluated as quadrature sums
against sampled atoms rather than with filter banks, which keeps the
continuous-domain identities intact on the grid.

Coefficients of a translate ``f(. + h)`` are computed as ``<f, psi_{j,k}(. - h)>``.
For shifts that are whole numbers of samples this is identical to shifting
the samples circularly; for sub-sample shifts it is the only definition that
does not depend on an interpolation model for ``f``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .checks import BoundCheck
from .signal_core import GridSpec, SampledSignal, norm
from .wavelet_atoms import WaveletPair

__all__ = [
    "BoundaryError",
    "UnsupportedSynthesisError",
    "CoeffGrid",
    "default_k_range",
    "analyze",
    "predict_dyadic_shift",
    "synthesize",
    "amplitude_phase_synthesize",
    "parseval_check",
]


class BoundaryError(IndexError):
    """Requested coefficient indices fall outside the stored range."""

    def __init__(self, message, clipped):
        super().__init__(message)
        self.clipped = list(clipped)


class UnsupportedSynthesisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoeffGrid:
    """Coefficients over a finite window of scales ``j`` and shifts ``k``.

    ``ks[j]``, ``a[j]`` and ``b[j]`` are aligned 1-D arrays; ``c`` is derived
    from ``a`` and ``b`` so the relation ``c = (a - i b)/2`` holds exactly.
    """

    ks: Dict[int, np.ndarray]
    a: Dict[int, np.ndarray]
    b: Dict[int, np.ndarray]
    pair_label: str
    grid: GridSpec
    shift: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def scales(self):
        return sorted(self.ks)

    @property
    def j_range(self):
        s = self.scales
        return (s[0], s[-1]) if s else None

    def k_range(self, j: int):
        ks = self.ks[j]
        return (int(ks[0]), int(ks[-1])) if len(ks) else None

    def c(self, j: int) -> np.ndarray:
        return 0.5 * (self.a[j] - 1j * self.b[j])

    def abs_c(self, j: int) -> np.ndarray:
        return np.abs(self.c(j))

    def phase(self, j: int) -> np.ndarray:
        """Phase in ``]-pi, pi]``; zero coefficients get phase 0."""
        c = self.c(j)
        ph = np.angle(c)
        ph = np.where(ph <= -np.pi, np.pi, ph)
        return np.where(c == 0, 0.0, ph)

    def zero_phase_flags(self, j: int) -> np.ndarray:
        return self.c(j) == 0

    def index(self, j: int, k: int) -> int:
        ks = self.ks[j]
        pos = np.searchsorted(ks, k)
        if pos >= len(ks) or ks[pos] != k:
            raise BoundaryError(f"k={k} not stored at scale j={j}", [k])
        return int(pos)

    def coefficient(self, j: int, k: int) -> complex:
        return complex(self.c(j)[self.index(j, k)])

    def energy(self) -> float:
        return float(sum(np.sum(self.a[j] ** 2) for j in self.scales))

    def records(self):
        for j in self.scales:
            c = self.c(j)
            ph = self.phase(j)
            for i, k in enumerate(self.ks[j]):
                yield {
                    "j": j,
                    "k": int(k),
                    "a": float(self.a[j][i]),
                    "b": float(self.b[j][i]),
                    "re_c": float(c[i].real),
                    "im_c": float(c[i].imag),
                    "abs_c": float(abs(c[i])),
                    "phase_c": float(ph[i]),
                }

    CSV_COLUMNS = ("j", "k", "a", "b", "re_c", "im_c", "abs_c", "phase_c")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for rec in self.records():
            writer.writerow([repr(rec[c]) if isinstance(rec[c], float) else rec[c] for c in self.CSV_COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "pair": self.pair_label,
            "grid": {
                "n_samples": self.grid.n_samples,
                "x0": self.grid.x0,
                "dx": self.grid.dx,
                "periodic": self.grid.periodic,
            },
            "shift": self.shift,
            "scales": {
                str(j): {
                    "k": [int(k) for k in self.ks[j]],
                    "a": [float(v) for v in self.a[j]],
                    "b": [float(v) for v in self.b[j]],
                }
                for j in self.scales
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "CoeffGrid":
        g = d["grid"]
        grid = GridSpec(g["n_samples"], g["x0"], g["dx"], g["periodic"])
        ks, a, b = {}, {}, {}
        for js, rec in d["scales"].items():
            j = int(js)
            ks[j] = np.asarray(rec["k"], dtype=int)
            a[j] = np.asarray(rec["a"], dtype=float)
            b[j] = np.asarray(rec["b"], dtype=float)
        return cls(ks, a, b, d["pair"], grid, d.get("shift", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "CoeffGrid":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_csv(cls, text: str, grid: GridSpec, pair_label: str = "") -> "CoeffGrid":
        rows = list(csv.DictReader(io.StringIO(text)))
        ks, a, b = {}, {}, {}
        for r in rows:
            j = int(r["j"])
            ks.setdefault(j, []).append(int(r["k"]))
            a.setdefault(j, []).append(float(r["a"]))
            b.setdefault(j, []).append(float(r["b"]))
        return cls(
            {j: np.asarray(v) for j, v in ks.items()},
            {j: np.asarray(v) for j, v in a.items()},
            {j: np.asarray(v) for j, v in b.items()},
            pair_label,
            grid,
        )


def default_k_range(pair: WaveletPair, grid: GridSpec, j: int) -> np.ndarray:
    """All shifts whose atom meets the signal domain.

    On a periodic grid these are the ``2**j * L`` distinct periodized atoms.
    """
    scale = 2.0**j
    if grid.periodic:
        count = scale * grid.length
        n = max(1, int(round(count)))
        if not math.isclose(count, n, rel_tol=1e-9):
            n = max(1, int(math.floor(count)))
        start = int(math.ceil(scale * grid.x0 - 1e-9))
        return np.arange(start, start + n)
    lo, hi = pair.window.extent
    x_lo, x_hi = grid.x0, grid.x0 + grid.length
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 0.0
    k_min = math.floor(scale * x_lo - hi)
    k_max = math.ceil(scale * x_hi - lo)
    return np.arange(k_min, k_max + 1)


def _as_scales(j_range) -> list:
    if isinstance(j_range, int):
        return [j_range]
    if isinstance(j_range, tuple) and len(j_range) == 2:
        return list(range(j_range[0], j_range[1] + 1))
    return sorted(int(j) for j in j_range)


def analyze(
    f: SampledSignal,
    pair: WaveletPair,
    j_range,
    k_ranges: Optional[Mapping[int, Iterable[int]]] = None,
    shift: float = 0.0,
) -> CoeffGrid:
    """DWT/DTCWT coefficients of ``f(. + shift)`` over the given window.

    ``j_range`` is an int, an inclusive ``(j_min, j_max)`` tuple or a list of
    scales.  ``k_ranges`` maps a scale to its shifts and defaults to
    :func:`default_k_range`.
    """
    if not f.is_real:
        raise ValueError("analyze expects a real-valued signal")
    scales = _as_scales(j_range)
    if not scales:
        raise ValueError("empty scale range")
    ks, a, b = {}, {}, {}
    for j in scales:
        if k_ranges is not None and j in k_ranges:
            kk = np.asarray(list(k_ranges[j]), dtype=int)
        else:
            kk = default_k_range(pair, f.grid, j)
        if kk.size == 0:
            raise ValueError(f"empty k range at scale {j}")
        psi, psi_p = pair.atoms(f.grid, j, kk, shift)
        ks[j] = kk
        a[j] = (psi @ f.samples) * f.grid.dx
        b[j] = (psi_p @ f.samples) * f.grid.dx
    return CoeffGrid(ks, a, b, pair.label, f.grid, shift, {"convention": f.grid.convention})


def predict_dyadic_shift(coeffs: CoeffGrid, j: int, m: int, ks: Optional[Sequence[int]] = None) -> np.ndarray:
    """Row ``c_j[k + m]``: the scale-j coefficients of ``f(. + 2**-j m)``.

    On periodic grids indices wrap around the ``2**j L`` stored atoms.
    """
    stored = coeffs.ks[j]
    if ks is None:
        ks = stored
    ks = np.asarray(ks, dtype=int)
    c = coeffs.c(j)
    targets = ks + m
    if coeffs.grid.periodic and len(stored) == int(round(2.0**j * coeffs.grid.length)):
        pos = (targets - stored[0]) % len(stored)
        return c[pos]
    lookup = {int(k): i for i, k in enumerate(stored)}
    missing = [int(t) for t in targets if int(t) not in lookup]
    if missing:
        raise BoundaryError(
            f"k+m outside stored range at j={j}: clipped indices {missing}", missing
        )
    return c[[lookup[int(t)] for t in targets]]


def _require_orthonormal(pair: WaveletPair, what: str):
    if not pair.orthonormal:
        raise UnsupportedSynthesisError(
            f"{what} needs an orthonormal pair; {pair.label} is not (no dual wavelets available)"
        )


def synthesize(coeffs: CoeffGrid, pair: WaveletPair, branch: str = "real") -> SampledSignal:
    """``sum a_j[k] psi_{j,k}`` (real branch) or ``sum b_j[k] psi'_{j,k}`` (imaginary)."""
    _require_orthonormal(pair, "synthesis")
    if branch not in ("real", "imaginary"):
        raise ValueError("branch must be 'real' or 'imaginary'")
    out = np.zeros(coeffs.grid.n_samples)
    for j in coeffs.scales:
        psi, psi_p = pair.atoms(coeffs.grid, j, coeffs.ks[j], coeffs.shift)
        out += coeffs.a[j] @ psi if branch == "real" else coeffs.b[j] @ psi_p
    return SampledSignal(out, coeffs.grid, f"synthesis[{branch}]")


def amplitude_phase_synthesize(coeffs: CoeffGrid, pair: WaveletPair) -> SampledSignal:
    """``sum |c_j[k]| Xi_{j,k}[w cos(omega0 y + xi0 + omega_j[k])]``.

    Each term is evaluated from the window and carrier directly, i.e. as
    ``Re(|c| exp(i(omega_j[k] + xi0)) Xi_{j,k}[w exp(i omega0 y)])``.
    """
    _require_orthonormal(pair, "amplitude-phase synthesis")
    if not pair.exactly_modulated:
        raise UnsupportedSynthesisError(f"{pair.label} is not exactly modulated")
    out = np.zeros(coeffs.grid.n_samples)
    for j in coeffs.scales:
        g = pair.carrier_atoms(coeffs.grid, j, coeffs.ks[j], coeffs.shift)
        amp = coeffs.abs_c(j) * np.exp(1j * (coeffs.phase(j) + pair.xi0))
        out += np.real(amp @ g)
    return SampledSignal(out, coeffs.grid, "synthesis[amplitude-phase]")


def parseval_check(coeffs: CoeffGrid, f: SampledSignal) -> BoundCheck:
    """Bessel/Parseval: ``sum a_j[k]^2 <= ||f||^2`` with the captured fraction."""
    captured = coeffs.energy()
    total = norm(f) ** 2
    ratio = captured / total if total > 0 else 0.0
    return BoundCheck(
        "parseval",
        captured,
        total,
        {"captured_fraction": ratio, "pair": coeffs.pair_label, "scales": coeffs.scales},
    )
