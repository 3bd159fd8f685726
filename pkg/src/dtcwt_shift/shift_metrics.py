"""Shift errors of DTCWT coefficients and numerical checks of their bounds.

For a translate ``f^h = f(. + h)`` the level-j coefficients rotate by roughly
``theta = 2**j * omega0 * h``.  This module measures how well that phase
compensation predicts ``c^h``, splits the residual into a carrier part
``E_h`` and a window part ``W_h``, and evaluates every inequality relating
these quantities to the shift errors of the real and imaginary branches.

All quantities for a record ``(j, k)`` are computed from sampled atoms on the
signal's grid; coefficients of ``f^h`` use shifted atoms (see
:mod:`dtcwt_shift.dtcwt`).
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .checks import BoundCheck, DEGENERATE, NOT_APPLICABLE
from .dtcwt import CoeffGrid, analyze, default_k_range, _as_scales
from .signal_core import SampledSignal, norm
from .wavelet_atoms import WaveletPair

__all__ = [
    "BoundCheck",
    "UndefinedRatioError",
    "UnsolvableAngleError",
    "UnsupportedPairError",
    "ShiftRecord",
    "ShiftErrorReport",
    "SensitivityEstimate",
    "carrier_phase",
    "wrap_angle",
    "shift_errors",
    "optimal_phase",
    "branch_ratio",
    "ratio_R",
    "sensitivity",
    "sensitivity_grid",
    "error_ratio_bounds",
    "window_carrier_split",
    "eh_closed_form_checks",
    "sum_identity_checks",
    "alpha_beta",
    "wh_eh_limit",
    "wh_eh_richardson",
    "kh_bound_check",
    "phi_equivalence_check",
    "EpsilonReport",
    "epsilon_identity",
    "decay_bound_rhs",
    "decay_bound_check",
    "orthonormality_defect",
    "DEFAULT_FLOOR",
]

DEFAULT_FLOOR = 0.25
ZERO_SENSITIVITY = 1e-9


class UndefinedRatioError(ZeroDivisionError):
    def __init__(self, numerator, denominator):
        super().__init__(f"ratio undefined: numerator={numerator!r}, denominator={denominator!r}")
        self.numerator = numerator
        self.denominator = denominator


class UnsolvableAngleError(ValueError):
    pass


class UnsupportedPairError(ValueError):
    pass


def wrap_angle(x):
    """Reduce angles into ``]-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y <= -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def carrier_phase(j: int, omega0: float, h: float) -> float:
    """Phase compensation ``2**j * omega0 * h``."""
    return (2.0**j) * omega0 * h


def _require_modulated(pair: WaveletPair, what: str):
    if not pair.exactly_modulated:
        raise UnsupportedPairError(f"{what} needs an exactly modulated pair; got {pair.label}")


def _dot(f: SampledSignal, rows: np.ndarray) -> np.ndarray:
    """``int f(x) rows(x) dx`` for each row (no conjugation)."""
    return (rows @ f.samples) * f.grid.dx


# -- elementary quantities ------------------------------------------------


def optimal_phase(c: complex, c_h: complex):
    """Phase minimizing ``|exp(i phi) c - c_h|`` and the minimum.

    Returns ``(phi_star, err, degenerate)``; for ``c == 0`` the phase is 0.
    """
    c, c_h = complex(c), complex(c_h)
    if c == 0:
        return 0.0, abs(c_h), True
    phi = wrap_angle(np.angle(c_h) - np.angle(c)) if c_h != 0 else 0.0
    return float(phi), abs(abs(c) - abs(c_h)), False


def branch_ratio(a, b, a_h, b_h, phi):
    """``(e^{i phi} a - a_h) / (e^{i phi} b - b_h)``."""
    rot = np.exp(1j * phi)
    num = rot * a - a_h
    den = rot * b - b_h
    if np.ndim(den) == 0:
        if den == 0:
            raise UndefinedRatioError(complex(num), complex(den))
        return complex(num / den)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den == 0, np.nan + 0j, num / np.where(den == 0, 1, den))


def _single(f, pair, j, k, h):
    c0 = analyze(f, pair, [j], {j: [k]})
    c1 = analyze(f, pair, [j], {j: [k]}, shift=h)
    return c0, c1


def ratio_R(f: SampledSignal, pair: WaveletPair, j: int, k: int, h: float, phi: float) -> complex:
    """Ratio of the phase-rotated real-branch and imaginary-branch shift errors."""
    c0, c1 = _single(f, pair, j, k, h)
    return branch_ratio(c0.a[j][0], c0.b[j][0], c1.a[j][0], c1.b[j][0], phi)


def _split_rows(f, pair, j, ks, h):
    scale = 2.0**j
    g0 = pair.carrier_atoms(f.grid, j, ks)
    gt = pair.carrier_atoms(f.grid, j, ks, window_shift=scale * h)
    theta = carrier_phase(j, pair.omega0, h)
    base = _dot(f, np.conj(g0))
    e_h = base * (1 - np.exp(1j * theta))
    w_h = _dot(f, np.conj(g0 - gt))
    return e_h, w_h


def window_carrier_split(f: SampledSignal, pair: WaveletPair, j: int, k: int, h: float):
    """Carrier part ``E_h`` and window part ``W_h`` of the shift perturbation.

    ``E_h = int f Xi_{j,k}[w(y)(e^{-i omega0 y} - e^{-i omega0 (y - 2^j h)})]`` and
    ``W_h = int f Xi_{j,k}[(w(y) - w(y - 2^j h)) e^{-i omega0 y}]``, integrated
    on the signal grid from the window itself (not from ``psi'``).
    """
    _require_modulated(pair, "window/carrier split")
    e_h, w_h = _split_rows(f, pair, j, [k], h)
    return complex(e_h[0]), complex(w_h[0])


def eh_closed_form_checks(report: ShiftErrorReport, tol: float = 1e-8) -> List[BoundCheck]:
    """Quadrature ``|E_h|`` against ``2|e^{i 2^j omega0 h} - 1| |c|`` (relative error <= tol)."""
    out = []
    for r in report.records:
        ctx = {"j": r.j, "k": r.k, "h": report.h, "pair": report.pair.get("label"), "abs_c": r.abs_c}
        if math.isnan(r.E_h.real):
            out.append(BoundCheck.skipped("E_h_closed_form", NOT_APPLICABLE, "pair not exactly modulated", **ctx))
            continue
        closed = 2 * abs(np.exp(1j * carrier_phase(r.j, _pair_omega0(report), report.h)) - 1) * r.abs_c
        if closed == 0:
            out.append(BoundCheck.skipped("E_h_closed_form", DEGENERATE, "zero closed form", **ctx))
            continue
        out.append(BoundCheck("E_h_closed_form", abs(abs(r.E_h) - closed) / closed, tol, ctx))
    return out


def sum_identity_checks(report: ShiftErrorReport, form: str = "stated", tol: float = 1e-8) -> List[BoundCheck]:
    """Relative residual of the carrier/window decomposition of ``2 e^{i xi0}(c - c^h)``.

    ``form="stated"`` tests ``E_h + W_h``; ``form="exact"`` tests
    ``E_h + e^{i 2^j omega0 h} W_h``, which follows from the definitions
    without approximation.  The two differ by ``(1 - e^{i theta}) W_h``.
    """
    if form not in ("stated", "exact"):
        raise ValueError(f"unknown form {form!r}")
    xi0 = report.pair.get("xi0")
    out = []
    for r in report.records:
        ctx = {"j": r.j, "k": r.k, "h": report.h, "pair": report.pair.get("label"), "form": form, "abs_c": r.abs_c}
        name = f"sum_identity_{form}"
        if math.isnan(r.E_h.real):
            out.append(BoundCheck.skipped(name, NOT_APPLICABLE, "pair not exactly modulated", **ctx))
            continue
        target = 2 * np.exp(1j * xi0) * (r.c - r.c_h)
        if target == 0:
            out.append(BoundCheck.skipped(name, DEGENERATE, "c == c^h", **ctx))
            continue
        rot = np.exp(1j * carrier_phase(r.j, _pair_omega0(report), report.h)) if form == "exact" else 1.0
        out.append(BoundCheck(name, abs(r.E_h + rot * r.W_h - target) / abs(target), tol, ctx))
    return out


def _pair_omega0(report: ShiftErrorReport) -> float:
    return float(report.pair.get("omega0"))


def alpha_beta(E_h: complex, W_h: complex, c: complex, j: int, omega0: float, h: float):
    """Angles ``alpha_h`` in ``[0, pi[`` with ``|W_h| = 2|e^{i alpha}-1||c|`` and ``beta_h``."""
    beta = wrap_angle(2.0 ** (j + 1) * omega0 * h)
    c_abs = abs(c)
    w_abs = abs(W_h)
    if w_abs == 0:
        return 0.0, beta
    if c_abs == 0 or w_abs >= 4 * c_abs:
        raise UnsolvableAngleError(
            f"|W_h|={w_abs:.3g} >= 4|c|={4 * c_abs:.3g}: no angle in [0, pi[ solves |W_h| = 2|e^(i alpha)-1||c|"
        )
    return 2 * math.asin(w_abs / (4 * c_abs)), beta


def _alpha_vec(w_abs, c_abs):
    with np.errstate(divide="ignore", invalid="ignore"):
        s = w_abs / (4 * c_abs)
        return np.where((c_abs > 0) & (s < 1), 2 * np.arcsin(np.minimum(s, 1)), np.nan)


def kh_upper_bound(wh_over_eh: float, theta: float) -> float:
    """``2|W/E| / (|e^{i theta} + 1| - |W/E|)``, infinite when the denominator is not positive."""
    den = abs(np.exp(1j * theta) + 1) - wh_over_eh
    return 2 * wh_over_eh / den if den > 0 else math.inf


# -- the report ---------------------------------------------------------------


@dataclass
class ShiftRecord:
    j: int
    k: int
    c: complex
    c_h: complex
    phi: float
    complex_optimal: float
    complex_phasecomp: float
    real_err: float
    imag_err: float
    abs_c: float
    significant: bool
    R_h: complex = complex("nan")
    E_h: complex = complex("nan")
    W_h: complex = complex("nan")
    alpha_h: float = math.nan
    beta_h: float = math.nan
    K_h_bound: float = math.nan
    flags: List[str] = field(default_factory=list)

    @property
    def wh_over_eh(self) -> float:
        return abs(self.W_h) / abs(self.E_h) if abs(self.E_h) > 0 else math.nan

    CSV_COLUMNS = (
        "j", "k", "abs_c", "significant", "complex-optimal", "complex-phasecomp", "real", "imag",
        "phi", "R_re", "R_im", "R_dist_i", "E_re", "E_im", "W_re", "W_im", "W_over_E",
        "alpha_h", "beta_h", "K_h_bound", "flags",
    )

    def row(self) -> dict:
        return {
            "j": self.j,
            "k": self.k,
            "abs_c": self.abs_c,
            "significant": int(self.significant),
            "complex-optimal": self.complex_optimal,
            "complex-phasecomp": self.complex_phasecomp,
            "real": self.real_err,
            "imag": self.imag_err,
            "phi": self.phi,
            "R_re": self.R_h.real,
            "R_im": self.R_h.imag,
            "R_dist_i": abs(self.R_h - 1j),
            "E_re": self.E_h.real,
            "E_im": self.E_h.imag,
            "W_re": self.W_h.real,
            "W_im": self.W_h.imag,
            "W_over_E": self.wh_over_eh,
            "alpha_h": self.alpha_h,
            "beta_h": self.beta_h,
            "K_h_bound": self.K_h_bound,
            "flags": ";".join(self.flags),
        }


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return v


def _json_num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


@dataclass
class ShiftErrorReport:
    records: List[ShiftRecord]
    h: float
    phi_policy: str
    omega0_used: float
    significance_floor: float
    pair: dict
    coeffs: Optional[CoeffGrid] = None
    coeffs_h: Optional[CoeffGrid] = None
    warnings: List[str] = field(default_factory=list)

    def scale(self, j: int) -> List[ShiftRecord]:
        return [r for r in self.records if r.j == j]

    @property
    def scales(self):
        return sorted({r.j for r in self.records})

    def significant(self, j: Optional[int] = None) -> List[ShiftRecord]:
        return [r for r in self.records if r.significant and (j is None or r.j == j)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ShiftRecord.CSV_COLUMNS)
        for r in self.records:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in ShiftRecord.CSV_COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "h": self.h,
            "phi_policy": self.phi_policy,
            "omega0_used": self.omega0_used,
            "significance_floor": self.significance_floor,
            "pair": self.pair,
            "warnings": list(self.warnings),
            "records": [{k: _json_num(v) for k, v in r.row().items()} for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


PhiPolicy = Union[str, float, Callable[[int, int, float], float]]


def shift_errors(
    f: SampledSignal,
    pair: WaveletPair,
    j_range,
    h: float,
    k_ranges: Optional[Mapping[int, Iterable[int]]] = None,
    phi_policy: PhiPolicy = "carrier",
    omega0: Optional[float] = None,
    floor: float = DEFAULT_FLOOR,
) -> ShiftErrorReport:
    """Per-coefficient shift errors of ``f`` under the translation ``h``.

    ``phi_policy`` is ``"carrier"`` (``phi = 2**j omega0 h``), ``"corrected"``
    (``theta + sign(beta_h) alpha_h``), a number, or a callable ``(j, k, h)``.
    ``omega0`` overrides the carrier frequency used for the compensation only.
    A coefficient is significant when ``|c| >= floor * max |c|`` at its scale.
    """
    scales = _as_scales(j_range)
    notes = []
    for j in scales:
        if abs(h) >= 2.0**-j:
            msg = f"|h|={abs(h):g} is not below 2^-j={2.0**-j:g} at scale {j}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
    coeffs = analyze(f, pair, scales, k_ranges)
    coeffs_h = analyze(f, pair, scales, coeffs.ks, shift=h)
    om = pair.omega0 if omega0 is None else float(omega0)
    modulated = pair.exactly_modulated
    policy_name = phi_policy if isinstance(phi_policy, str) else "custom"
    if policy_name not in ("carrier", "corrected", "custom"):
        raise ValueError(f"unknown phi policy {phi_policy!r}")
    if policy_name == "corrected" and not modulated:
        raise UnsupportedPairError("the corrected phase needs an exactly modulated pair")

    records = []
    for j in scales:
        ks = coeffs.ks[j]
        c, ch = coeffs.c(j), coeffs_h.c(j)
        a, b = coeffs.a[j], coeffs.b[j]
        ah, bh = coeffs_h.a[j], coeffs_h.b[j]
        absc = np.abs(c)
        cmax = absc.max() if absc.size else 0.0
        theta = carrier_phase(j, om, h)
        if modulated:
            e_h, w_h = _split_rows(f, pair, j, ks, h)
            alpha = _alpha_vec(np.abs(w_h), absc)
            beta = wrap_angle(2.0 ** (j + 1) * pair.omega0 * h)
        else:
            e_h = w_h = np.full(len(ks), complex("nan"))
            alpha = np.full(len(ks), np.nan)
            beta = math.nan
        for i, k in enumerate(ks):
            flags = []
            if policy_name == "carrier":
                phi = theta
            elif policy_name == "corrected":
                al = alpha[i]
                if math.isnan(al):
                    flags.append("alpha_unsolvable")
                    al = 0.0
                phi = carrier_phase(j, pair.omega0, h) + np.sign(beta) * al
            elif callable(phi_policy):
                phi = float(phi_policy(j, int(k), h))
            else:
                phi = float(phi_policy)
            if c[i] == 0:
                flags.append("zero_coefficient")
            _, opt, _ = optimal_phase(c[i], ch[i])
            pc = abs(np.exp(1j * phi) * c[i] - ch[i])
            re_err = 2 * abs(c[i].real - ch[i].real)
            im_err = 2 * abs(c[i].imag - ch[i].imag)
            den = np.exp(1j * phi) * b[i] - bh[i]
            if den == 0:
                flags.append("undefined_R")
                r_h = complex("nan")
            else:
                r_h = complex((np.exp(1j * phi) * a[i] - ah[i]) / den)
            wh_eh = abs(w_h[i]) / abs(e_h[i]) if modulated and abs(e_h[i]) > 0 else math.nan
            kb = kh_upper_bound(wh_eh, carrier_phase(j, pair.omega0, h)) if not math.isnan(wh_eh) else math.nan
            records.append(
                ShiftRecord(
                    j=j,
                    k=int(k),
                    c=complex(c[i]),
                    c_h=complex(ch[i]),
                    phi=float(phi),
                    complex_optimal=float(opt),
                    complex_phasecomp=float(pc),
                    real_err=float(re_err),
                    imag_err=float(im_err),
                    abs_c=float(absc[i]),
                    significant=bool(cmax > 0 and absc[i] >= floor * cmax),
                    R_h=r_h,
                    E_h=complex(e_h[i]),
                    W_h=complex(w_h[i]),
                    alpha_h=float(alpha[i]),
                    beta_h=float(beta),
                    K_h_bound=float(kb),
                    flags=flags,
                )
            )
    return ShiftErrorReport(
        records, float(h), policy_name, om, floor, pair.describe(), coeffs, coeffs_h, notes
    )


# -- translation sensitivity ------------------------------------------------


@dataclass
class SensitivityEstimate:
    """Sampled infima ``B_a``, ``B_b`` and supremum ``Phi`` for one coefficient."""

    B_a: float
    B_b: float
    Phi: float
    h_grid: np.ndarray
    j: int
    k: int
    degenerate: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "j": self.j,
            "k": self.k,
            "B_a": _json_num(self.B_a),
            "B_b": _json_num(self.B_b),
            "Phi": _json_num(self.Phi),
            "h_grid": [float(v) for v in self.h_grid],
            "degenerate": list(self.degenerate),
        }


def sensitivity_grid(j: int, n_per_sign: int = 32, include: Sequence[float] = ()) -> np.ndarray:
    """Log-spaced ``|h|`` in ``[2^-j/512, 2^-j (1 - 1e-6)]``, both signs, plus ``include``."""
    top = 2.0**-j
    mags = np.geomspace(top / 512, top * (1 - 1e-6), n_per_sign)
    grid = np.concatenate([-mags[::-1], mags, np.asarray(include, dtype=float)])
    return np.unique(grid[grid != 0])


def _phi_of_h(pair, j, hs, policy, omega0, f=None, ks=None, c=None):
    om = pair.omega0 if omega0 is None else omega0
    theta = carrier_phase(j, om, np.asarray(hs))
    if policy == "carrier":
        return np.broadcast_to(theta, (len(ks), len(hs))).copy()
    if policy == "corrected":
        out = np.empty((len(ks), len(hs)))
        absc = np.abs(c)
        for n, h in enumerate(hs):
            _, w_h = _split_rows(f, pair, j, ks, h)
            al = np.nan_to_num(_alpha_vec(np.abs(w_h), absc), nan=0.0)
            beta = wrap_angle(2.0 ** (j + 1) * pair.omega0 * h)
            out[:, n] = carrier_phase(j, pair.omega0, h) + np.sign(beta) * al
        return out
    raise ValueError(f"sensitivity supports 'carrier' and 'corrected' policies, not {policy!r}")


def sensitivity_scale(
    f: SampledSignal,
    pair: WaveletPair,
    j: int,
    ks: Sequence[int],
    h_grid: Optional[Sequence[float]] = None,
    phi_policy: str = "carrier",
    omega0: Optional[float] = None,
) -> Dict[int, SensitivityEstimate]:
    """:func:`sensitivity` for every ``k`` of one scale at once."""
    hs = sensitivity_grid(j) if h_grid is None else np.asarray(h_grid, dtype=float)
    if np.any(hs == 0) or np.any(np.abs(hs) >= 2.0**-j):
        raise ValueError("h grid must lie in ]-2^-j, 2^-j[ without 0")
    ks = np.asarray(ks, dtype=int)
    base = analyze(f, pair, [j], {j: ks})
    a, b = base.a[j], base.b[j]
    ra = np.empty((len(ks), len(hs)))
    rb = np.empty((len(ks), len(hs)))
    for n, h in enumerate(hs):
        sh = analyze(f, pair, [j], {j: ks}, shift=h)
        with np.errstate(divide="ignore", invalid="ignore"):
            ra[:, n] = np.abs(a - sh.a[j]) / np.abs(h * a)
            rb[:, n] = np.abs(b - sh.b[j]) / np.abs(h * b)
    phis = _phi_of_h(pair, j, hs, phi_policy, omega0, f, ks, base.c(j))
    phi_ratio = np.abs((np.exp(1j * phis) - 1) / hs)
    out = {}
    for i, k in enumerate(ks):
        flags = []
        if a[i] == 0:
            flags.append("a_zero")
        if b[i] == 0:
            flags.append("b_zero")
        B_a = float(np.min(ra[i])) if a[i] != 0 else math.inf
        B_b = float(np.min(rb[i])) if b[i] != 0 else math.inf
        # numerically zero relative to the largest sampled ratio
        if B_a <= ZERO_SENSITIVITY * np.max(ra[i]):
            flags.append("B_a_zero")
        if B_b <= ZERO_SENSITIVITY * np.max(rb[i]):
            flags.append("B_b_zero")
        out[int(k)] = SensitivityEstimate(B_a, B_b, float(np.max(phi_ratio[i])), hs, j, int(k), flags)
    return out


def sensitivity(
    f: SampledSignal,
    pair: WaveletPair,
    j: int,
    k: int,
    h_grid: Optional[Sequence[float]] = None,
    phi_policy: str = "carrier",
    omega0: Optional[float] = None,
) -> SensitivityEstimate:
    """Translation sensitivity of ``a_j[k]`` and ``b_j[k]`` over a grid of shifts.

    ``B_a = min_h |a - a^h| / |h a|`` (likewise ``B_b``) and
    ``Phi = max_h |(e^{i phi_h} - 1)/h|``.
    """
    return sensitivity_scale(f, pair, j, [k], h_grid, phi_policy, omega0)[int(k)]


def error_ratio_bounds(
    report: ShiftErrorReport, sens: Mapping[tuple, SensitivityEstimate]
) -> List[BoundCheck]:
    """Bounds of the phase-compensated error by the real and imaginary branch errors.

    For each record: ``pc/real <= (1 + Phi/B_a)|1 - i/R_h|/2`` and
    ``pc/imag <= (1 + Phi/B_b)|R_h - i|/2``.  ``sens`` maps ``(j, k)`` to a
    sensitivity estimate whose grid contains the report's ``h``.
    """
    checks = []
    for r in report.records:
        ctx = {"j": r.j, "k": r.k, "h": report.h, "pair": report.pair.get("label")}
        s = sens.get((r.j, r.k))
        if s is None:
            raise KeyError(f"no sensitivity estimate for (j, k)=({r.j}, {r.k})")
        if not np.any(np.isclose(s.h_grid, report.h, rtol=1e-12, atol=0)):
            raise ValueError("sensitivity grid must contain the report's h")
        R = r.R_h
        for name, err, B, zero_flag, factor in (
            ("pc_over_real", r.real_err, s.B_a, "B_a_zero", lambda: abs(1 - 1j / R) / 2),
            ("pc_over_imag", r.imag_err, s.B_b, "B_b_zero", lambda: abs(R - 1j) / 2),
        ):
            c = dict(ctx, B=B, Phi=s.Phi, R_re=R.real, R_im=R.imag)
            if err == 0:
                checks.append(BoundCheck.skipped(name, DEGENERATE, "zero branch error", **c))
                continue
            if R == 0 or math.isnan(R.real):
                checks.append(BoundCheck.skipped(name, DEGENERATE, "R_h undefined", **c))
                continue
            if not B > 0 or zero_flag in s.degenerate:
                checks.append(BoundCheck.skipped(name, DEGENERATE, "translation sensitivity is zero", **c))
                continue
            rhs = (1 + s.Phi / B) * factor()
            checks.append(BoundCheck(name, r.complex_phasecomp / err, rhs, c))
    return checks


# -- limits of |W_h / E_h| -------------------------------------------------


def wh_eh_limit(f: SampledSignal, pair: WaveletPair, j: int, k: int):
    """Small-shift limit of ``|W_h/E_h|`` and its Cauchy-Schwarz bound.

    ``limit = |int f Xi_{j,k}[w' e^{-i omega0 y}]| / (2 omega0 |c|)`` and
    ``bound = ||f|| ||w'|| / (2 omega0 |c|)``.
    """
    _require_modulated(pair, "the |W/E| limit")
    c = analyze(f, pair, [j], {j: [k]}).c(j)[0]
    if c == 0:
        raise UndefinedRatioError(complex("nan"), 0j)
    d = pair.carrier_atoms(f.grid, j, [k], derivative=True)
    integral = _dot(f, np.conj(d))[0]
    den = 2 * pair.omega0 * abs(c)
    return abs(integral) / den, norm(f) * pair.window.derivative_l2_norm() / den


def wh_eh_ratio(f: SampledSignal, pair: WaveletPair, j: int, ks, h: float) -> np.ndarray:
    e_h, w_h = _split_rows(f, pair, j, ks, h)
    return np.abs(w_h) / np.abs(e_h)


def wh_eh_richardson(f, pair, j, ks, base=1e-3):
    """Second-order Richardson extrapolation of ``|W_h/E_h|`` from ``h, h/2, h/4``.

    ``h = base * 2**-j``.  Returns an array over ``ks``.
    """
    h = base * 2.0**-j
    r1, r2, r4 = (wh_eh_ratio(f, pair, j, ks, h / d) for d in (1, 2, 4))
    return (8 * r4 - 6 * r2 + r1) / 3


def _coeff_pair(f, pair, j, k, h):
    c0, c1 = _single(f, pair, j, k, h)
    return c0, c1


def kh_bound_check(f: SampledSignal, pair: WaveletPair, j: int, k: int, h: float, r_tol: float = 1e-8):
    """Check ``|K_h|`` against its bound and the identity ``R_h = i(1+K_h)/(1-K_h)``.

    ``K_h = <Delta, Psi_{j,k}> / <Delta, conj(Psi_{j,k})>`` with
    ``Delta = e^{i phi} f - f^h`` and the corrected phase
    ``phi = theta + sign(beta_h) alpha_h``.  Returns two checks; both are
    ``not_applicable`` when the hypotheses ``alpha_h < pi - |beta_h|`` and
    ``|W_h/E_h| < 1`` fail.
    """
    _require_modulated(pair, "the K_h bound")
    ctx = {"j": j, "k": k, "h": h, "pair": pair.label}
    c0, c1 = _coeff_pair(f, pair, j, k, h)
    c, ch = c0.c(j)[0], c1.c(j)[0]
    E, W = window_carrier_split(f, pair, j, k, h)
    theta = carrier_phase(j, pair.omega0, h)
    try:
        alpha, beta = alpha_beta(E, W, c, j, pair.omega0, h)
    except UnsolvableAngleError as exc:
        return [
            BoundCheck.skipped("K_h_bound", NOT_APPLICABLE, str(exc), **ctx),
            BoundCheck.skipped("R_h_K_h_identity", NOT_APPLICABLE, str(exc), **ctx),
        ]
    ratio = abs(W) / abs(E) if abs(E) > 0 else math.inf
    ctx.update(alpha_h=alpha, beta_h=beta, W_over_E=ratio)
    if not (alpha < math.pi - abs(beta) and ratio < 1):
        reason = "hypotheses alpha_h < pi - |beta_h| and |W_h/E_h| < 1 do not hold"
        return [
            BoundCheck.skipped("K_h_bound", NOT_APPLICABLE, reason, **ctx),
            BoundCheck.skipped("R_h_K_h_identity", NOT_APPLICABLE, reason, **ctx),
        ]
    phi = theta + np.sign(beta) * alpha
    # <Delta, Psi> and <Delta, conj Psi> by quadrature against the complex atoms
    psi0 = pair.analytic_atoms(f.grid, j, [k])[0]
    psih = pair.analytic_atoms(f.grid, j, [k], shift=h)[0]
    dx = f.grid.dx
    p = np.exp(1j * phi) * np.sum(f.samples * np.conj(psi0)) * dx - np.sum(f.samples * np.conj(psih)) * dx
    q = np.exp(1j * phi) * np.sum(f.samples * psi0) * dx - np.sum(f.samples * psih) * dx
    K = p / q
    bound = kh_upper_bound(ratio, theta)
    R = branch_ratio(c0.a[j][0], c0.b[j][0], c1.a[j][0], c1.b[j][0], phi)
    R_from_K = 1j * (1 + K) / (1 - K)
    ctx.update(phi=float(phi), K_abs=abs(K), R_re=R.real, R_im=R.imag)
    return [
        BoundCheck("K_h_bound", abs(K), bound, dict(ctx)),
        BoundCheck("R_h_K_h_identity", abs(R - R_from_K), r_tol * max(1.0, abs(R)), dict(ctx)),
    ]


def phi_equivalence_check(f: SampledSignal, pair: WaveletPair, j: int, k: int, h: float) -> BoundCheck:
    """``|phi_corrected / theta - 1| <= 1.5 |W_h/E_h| + 1e-6``."""
    _require_modulated(pair, "phase equivalence")
    ctx = {"j": j, "k": k, "h": h, "pair": pair.label}
    c = analyze(f, pair, [j], {j: [k]}).c(j)[0]
    E, W = window_carrier_split(f, pair, j, k, h)
    theta = carrier_phase(j, pair.omega0, h)
    if theta == 0 or abs(E) == 0:
        return BoundCheck.skipped("phi_equivalence", DEGENERATE, "zero carrier phase", **ctx)
    try:
        alpha, beta = alpha_beta(E, W, c, j, pair.omega0, h)
    except UnsolvableAngleError as exc:
        return BoundCheck.skipped("phi_equivalence", NOT_APPLICABLE, str(exc), **ctx)
    phi = theta + np.sign(beta) * alpha
    ratio = abs(W) / abs(E)
    ctx.update(alpha_h=alpha, W_over_E=ratio, phi=float(phi), theta=theta)
    return BoundCheck("phi_equivalence", abs(phi / theta - 1), 1.5 * ratio + 1e-6, ctx)


# -- amplitude-phase identity ---------------------------------------------------


@dataclass
class EpsilonReport:
    """Sum of squared phase-compensated errors against its L2 expression.

    ``eps1``/``eps2`` are the norms of the synthesized differences over the
    chosen coefficient window (the form valid for any finite window of an
    orthonormal system).  ``eps1_window``/``eps2_window`` evaluate the
    window-difference expansion ``sum |c| Xi[(w - w(. + 2^j h)) C(+-(omega + theta))]``,
    which coincides with the former only for a complete system.
    """

    lhs: float
    eps1: float
    eps2: float
    eps1_window: float
    eps2_window: float
    h: float
    n_coefficients: int

    @property
    def rhs(self) -> float:
        return (self.eps1**2 + self.eps2**2) / 2

    @property
    def relative_error(self) -> float:
        if self.lhs == 0:
            return abs(self.rhs)
        return abs(self.lhs - self.rhs) / abs(self.lhs)

    @property
    def rhs_window(self) -> float:
        return (self.eps1_window**2 + self.eps2_window**2) / 2

    @property
    def sqrt_form(self) -> float:
        """The square-rooted right-hand side, ``sqrt((eps1^2 + eps2^2)/2)``."""
        return math.sqrt(self.rhs)

    @property
    def sqrt_discrepancy(self) -> float:
        """``sqrt_form / lhs``; equals 1 only when ``lhs == 1``."""
        return self.sqrt_form / self.lhs if self.lhs > 0 else math.nan

    def to_dict(self):
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "relative_error": self.relative_error,
            "eps1_window": self.eps1_window,
            "eps2_window": self.eps2_window,
            "rhs_window": self.rhs_window,
            "sqrt_form": self.sqrt_form,
            "sqrt_discrepancy": _json_num(self.sqrt_discrepancy),
            "h": self.h,
            "n_coefficients": self.n_coefficients,
        }


def epsilon_identity(
    f: SampledSignal,
    pair: WaveletPair,
    coeffs: Optional[CoeffGrid],
    h: float,
    J: Optional[Sequence[int]] = None,
    K: Optional[Union[Mapping[int, Iterable[int]], Iterable[int]]] = None,
) -> EpsilonReport:
    """Compare ``sum_{J x K} |e^{i theta} c - c^h|^2`` with ``(eps1^2 + eps2^2)/2``.

    ``coeffs`` are the coefficients of ``f`` (recomputed when None); ``J``
    defaults to its scales and ``K`` (a mapping per scale, or one set of shifts
    for every scale) to the stored shifts.
    """
    if not pair.orthonormal:
        raise UnsupportedPairError(f"{pair.label} is not orthonormal")
    _require_modulated(pair, "the amplitude-phase identity")
    if coeffs is None:
        coeffs = analyze(f, pair, J if J is not None else (0, 0))
    scales = list(coeffs.scales if J is None else J)
    grid = f.grid
    lhs = 0.0
    s1 = np.zeros(grid.n_samples)
    s2 = np.zeros(grid.n_samples)
    w1 = np.zeros(grid.n_samples)
    w2 = np.zeros(grid.n_samples)
    count = 0
    for j in scales:
        if K is None:
            ks = coeffs.ks[j]
        elif isinstance(K, Mapping):
            ks = np.asarray(list(K[j]), dtype=int)
        else:
            ks = np.asarray(list(K), dtype=int)
        idx = [coeffs.index(j, int(k)) for k in ks]
        c = coeffs.c(j)[idx]
        ch = analyze(f, pair, [j], {j: ks}, shift=h).c(j)
        theta = carrier_phase(j, pair.omega0, h)
        ct = np.exp(1j * theta) * c
        d = ct - ch
        lhs += float(np.sum(np.abs(d) ** 2))
        psi = pair.analytic_atoms(grid, j, ks)
        s1 += np.real((2 * d) @ psi)
        s2 += np.real((2 * np.conj(d)) @ psi)
        g0 = pair.carrier_atoms(grid, j, ks)
        gm = pair.carrier_atoms(grid, j, ks, window_shift=-(2.0**j) * h)
        rot = np.exp(1j * pair.xi0)
        w1 += np.real((ct * rot) @ (g0 - gm))
        w2 += np.real((np.conj(ct) * rot) @ (g0 - gm))
        count += len(ks)

    def l2(v):
        return float(np.sqrt(np.sum(v**2) * grid.dx))

    return EpsilonReport(lhs, l2(s1), l2(s2), l2(w1), l2(w2), float(h), count)


# -- decay of the phase-compensated error -------------------------------------


def decay_bound_rhs(j: int, lipschitz: float, p: float, q: float) -> float:
    """``2**j * l * (q - p)``."""
    return (2.0**j) * lipschitz * (q - p)


def orthonormality_defect(pair: WaveletPair, grid, j: int, ks) -> float:
    """``max |G - I|`` for the Gram matrices of ``psi_{j,k}`` and ``psi'_{j,k}``."""
    psi, psi_p = pair.atoms(grid, j, ks)
    eye = np.eye(len(ks))
    g1 = psi @ psi.T * grid.dx
    g2 = psi_p @ psi_p.T * grid.dx
    return float(max(np.max(np.abs(g1 - eye)), np.max(np.abs(g2 - eye))))


def decay_bound_check(
    f: SampledSignal,
    pair: WaveletPair,
    j_range,
    h_list: Sequence[float],
    k_ranges: Optional[Mapping[int, Iterable[int]]] = None,
    floor: float = DEFAULT_FLOOR,
) -> List[BoundCheck]:
    """``|e^{i theta} c - c^h| / |h c| <= 2^j l (q - p)`` on significant coefficients.

    ``[p, q]`` is the support of ``w - w(. + 2^j h)``, i.e. the window support
    widened by ``2^j |h|`` on one side.  Each check carries the measured
    orthonormality defect of the pair at its scale.
    """
    supp = pair.window.support
    lip = pair.window.lipschitz
    if supp is None or lip is None:
        raise UnsupportedPairError(f"{pair.label} has no compactly supported Lipschitz window")
    p_w, q_w = supp
    scales = _as_scales(j_range)
    coeffs = analyze(f, pair, scales, k_ranges)
    checks = []
    for j in scales:
        ks = coeffs.ks[j]
        c = coeffs.c(j)
        absc = np.abs(c)
        cmax = absc.max()
        defect = orthonormality_defect(pair, f.grid, j, ks)
        for h in h_list:
            ch = analyze(f, pair, [j], {j: ks}, shift=h).c(j)
            theta = carrier_phase(j, pair.omega0, h)
            t = (2.0**j) * h
            p, q = (p_w - t, q_w) if t >= 0 else (p_w, q_w - t)
            rhs = decay_bound_rhs(j, lip, p, q)
            for i, k in enumerate(ks):
                if absc[i] < floor * cmax or absc[i] == 0:
                    continue
                lhs = abs(np.exp(1j * theta) * c[i] - ch[i]) / abs(h * c[i])
                checks.append(
                    BoundCheck(
                        "decay_bound",
                        lhs,
                        rhs,
                        {
                            "j": j,
                            "k": int(k),
                            "h": h,
                            "p": p,
                            "q": q,
                            "lipschitz": lip,
                            "orthonormality_defect": defect,
                            "pair": pair.label,
                        },
                    )
                )
    return checks
