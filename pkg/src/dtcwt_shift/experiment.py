"""Experiment configuration and the end-to-end check suite.

The default configuration analyzes 512 samples of a piecewise-constant signal
on the periodic unit interval with the Gabor pair (omega0=5.3, xi0=5.2),
translated by one sample.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .checks import BoundCheck, DEGENERATE, NOT_APPLICABLE
from .dtcwt import parseval_check
from .io import read_signal
from .shift_metrics import (
    DEFAULT_FLOOR,
    ShiftErrorReport,
    decay_bound_check,
    eh_closed_form_checks,
    epsilon_identity,
    error_ratio_bounds,
    kh_bound_check,
    phi_equivalence_check,
    sensitivity_scale,
    sensitivity_grid,
    shift_errors,
    sum_identity_checks,
    wh_eh_limit,
    wh_eh_richardson,
)
from .signal_core import GridSpec, SampledSignal
from .wavelet_atoms import (
    WaveletPair,
    make_gabor_pair,
    make_raised_cosine_pair,
    make_shannon_pair,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "DEFAULT_THRESHOLDS",
    "block_signal",
    "build_signal",
    "build_pair",
    "run_shift_analysis",
    "fig2_summary",
    "fig3_summary",
    "negligible_error_checks",
    "verify_suite",
    "VerifyResult",
]

DEFAULT_THRESHOLDS = {
    "fig2_median": 0.2,
    "fig2_max_excess": 0.15,
    "fig3_distance": 0.5,
    "negligible_ratio": 0.25,
    "eh_relative": 1e-8,
    "sum_identity": 1e-8,
    "richardson": 1e-3,
    "richardson_fraction": 0.95,
    "epsilon_singleton": 1e-6,
    "epsilon_full": 1e-4,
}

PAIR_NAMES = ("gabor", "shannon", "raised_cosine")


class ConfigError(ValueError):
    pass


def _default_signal():
    return {"kind": "block", "breakpoints": [0.30, 0.55, 0.80], "levels": [0.0, 1.0, -0.5, 0.0]}


def _default_pair():
    return {"name": "gabor", "omega0": 5.3, "xi0": 5.2}


@dataclass
class ExperimentConfig:
    signal: dict = field(default_factory=_default_signal)
    pair: dict = field(default_factory=_default_pair)
    n_samples: int = 512
    h: float = 1 / 512
    h_sweep: List[float] = field(default_factory=lambda: [1 / 512, 1 / 1024, 1 / 2048])
    j_range: List[int] = field(default_factory=lambda: [1, 6])
    ratio_j: int = 3
    phi: str = "carrier"
    significance_floor: float = DEFAULT_FLOOR
    thresholds: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    omega0_override: Optional[float] = None
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 16:
            raise ConfigError(f"n_samples must be an integer >= 16, got {self.n_samples!r}")
        self.n_samples = int(self.n_samples)
        if not 0 <= self.significance_floor <= 1:
            raise ConfigError("significance_floor must lie in [0, 1]")
        if self.phi not in ("carrier", "corrected"):
            raise ConfigError(f"phi must be 'carrier' or 'corrected', got {self.phi!r}")
        if len(self.j_range) != 2 or self.j_range[0] > self.j_range[1]:
            raise ConfigError(f"j_range must be [j_min, j_max], got {self.j_range!r}")
        self.j_range = [int(v) for v in self.j_range]
        if self.pair.get("name") not in PAIR_NAMES:
            raise ConfigError(f"pair name must be one of {PAIR_NAMES}, got {self.pair.get('name')!r}")
        kind = self.signal.get("kind")
        if kind not in ("block", "atom", "file"):
            raise ConfigError(f"signal kind must be block, atom or file, got {kind!r}")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ConfigError(f"unknown thresholds: {sorted(unknown)}")
        self.thresholds = {**DEFAULT_THRESHOLDS, **{k: float(v) for k, v in self.thresholds.items()}}
        self.h = float(self.h)
        self.h_sweep = [float(v) for v in self.h_sweep]

    @property
    def scales(self) -> List[int]:
        return list(range(self.j_range[0], self.j_range[1] + 1))

    def to_dict(self, include_output: bool = True) -> dict:
        d = asdict(self)
        d["schema"] = 1
        if not include_output:
            del d["output_dir"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        schema = d.pop("schema", 1)
        if schema != 1:
            raise ConfigError(f"unsupported config schema {schema!r}")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


# -- signals and pairs ----------------------------------------------------------


def block_signal(grid: GridSpec, breakpoints, levels) -> SampledSignal:
    """Piecewise-constant signal: ``levels[i]`` on ``[b_{i-1}, b_i)``."""
    bp = np.asarray(breakpoints, dtype=float)
    lv = np.asarray(levels, dtype=float)
    if bp.ndim != 1 or lv.ndim != 1 or len(lv) != len(bp) + 1:
        raise ConfigError("need exactly one more level than breakpoints")
    if np.any(np.diff(bp) <= 0):
        raise ConfigError("breakpoints must be strictly increasing")
    lo, hi = grid.x0, grid.x0 + grid.length
    if len(bp) and (bp[0] < lo or bp[-1] > hi):
        raise ConfigError(f"breakpoints must lie within [{lo}, {hi}]")
    idx = np.searchsorted(bp, grid.x, side="right")
    return SampledSignal(lv[idx], grid, label="block", metadata={"breakpoints": bp.tolist(), "levels": lv.tolist()})


def build_pair(config: ExperimentConfig, grid: Optional[GridSpec] = None) -> WaveletPair:
    p = dict(config.pair)
    name = p.pop("name")
    try:
        if name == "gabor":
            return make_gabor_pair(grid=grid, **p)
        if name == "shannon":
            return make_shannon_pair(grid=grid, **p)
        return make_raised_cosine_pair(grid=grid, **p)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for pair {name}: {exc}") from None


def build_signal(config: ExperimentConfig, pair: Optional[WaveletPair] = None) -> SampledSignal:
    grid = GridSpec.unit_interval(config.n_samples)
    s = config.signal
    if s["kind"] == "block":
        return block_signal(grid, s.get("breakpoints", []), s.get("levels", [0.0]))
    if s["kind"] == "atom":
        pair = pair or build_pair(config, grid)
        psi, _ = pair.atoms(grid, int(s["j"]), [int(s["k"])])
        return SampledSignal(psi[0], grid, label=f"atom(j={s['j']},k={s['k']})")
    sig = read_signal(s["path"])
    if sig.grid.n_samples != config.n_samples:
        raise ConfigError(f"signal file has {sig.grid.n_samples} samples, config says {config.n_samples}")
    return sig


# -- figure summaries -----------------------------------------------------------


def run_shift_analysis(config: ExperimentConfig, f=None, pair=None, h=None) -> ShiftErrorReport:
    pair = pair or build_pair(config)
    f = f if f is not None else build_signal(config, pair)
    return shift_errors(
        f,
        pair,
        config.scales,
        config.h if h is None else h,
        phi_policy=config.phi,
        omega0=config.omega0_override,
        floor=config.significance_floor,
    )


def fig2_summary(report: ShiftErrorReport, thresholds: Optional[dict] = None) -> dict:
    """Phase-compensated against optimal and branch errors over significant records.

    Records with a zero branch error are degenerate and counted separately.
    """
    t = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    sig = report.significant()
    usable = [r for r in sig if r.real_err > 0 and r.imag_err > 0]
    ratios = [r.complex_phasecomp / max(r.real_err, r.imag_err) for r in usable]
    excess = [(r.complex_phasecomp - r.complex_optimal) / r.real_err for r in usable]
    per_scale = {}
    for j in report.scales:
        rs = [r for r in usable if r.j == j]
        if rs:
            per_scale[str(j)] = {
                "n": len(rs),
                "median_ratio": float(np.median([r.complex_phasecomp / max(r.real_err, r.imag_err) for r in rs])),
                "max_excess": float(max((r.complex_phasecomp - r.complex_optimal) / r.real_err for r in rs)),
            }
    if not usable:
        reason = "no significant record with nonzero branch errors"
        checks = [BoundCheck.skipped(n, DEGENERATE, reason, h=report.h) for n in ("fig2_median", "fig2_max_excess")]
        median = max_excess = math.nan
    else:
        median = float(np.median(ratios))
        worst = max(range(len(excess)), key=excess.__getitem__)
        max_excess = float(excess[worst])
        checks = [
            BoundCheck("fig2_median", median, t["fig2_median"], {"n": len(ratios), "h": report.h}),
            BoundCheck(
                "fig2_max_excess",
                max_excess,
                t["fig2_max_excess"],
                {"n": len(excess), "h": report.h, "j": usable[worst].j, "k": usable[worst].k},
            ),
        ]
    return {
        "median_ratio": median,
        "max_excess": max_excess,
        "n_significant": len(sig),
        "n_degenerate": len(sig) - len(usable),
        "per_scale": per_scale,
        "checks": checks,
        "status": _status(checks),
        "passed": _status(checks) != "fail",
    }


def _status(checks) -> str:
    applicable = [c for c in checks if c.applicable]
    if not applicable:
        return NOT_APPLICABLE
    return "pass" if all(c.passed for c in applicable) else "fail"


def fig3_summary(report: ShiftErrorReport, j: int, thresholds: Optional[dict] = None) -> dict:
    """``|R_h - i|`` at one scale and its correlation with ``|c|``."""
    t = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    recs = [r for r in report.scale(j) if not math.isnan(r.R_h.real)]
    if len(recs) < 3:
        checks = [BoundCheck.skipped(n, DEGENERATE, "R_h undefined on this scale", j=j) for n in ("fig3_distance", "fig3_correlation")]
        return {"j": j, "records": [], "max_significant_distance": math.nan, "correlation": math.nan,
                "checks": checks, "status": _status(checks), "passed": True}
    dist = np.array([abs(r.R_h - 1j) for r in recs])
    mags = np.array([r.abs_c for r in recs])
    sig = [d for d, r in zip(dist, recs) if r.significant]
    corr = float(np.corrcoef(mags, -dist)[0, 1])
    worst = float(max(sig)) if sig else math.nan
    checks = [
        BoundCheck("fig3_distance", worst, t["fig3_distance"], {"j": j, "h": report.h, "n": len(sig)}),
        # positive correlation: -corr <= 0 with no slack
        BoundCheck("fig3_correlation", -corr, 0.0, {"j": j, "corr": corr}),
    ]
    if not corr > 0:
        checks[1].status = "fail"
    return {
        "j": j,
        "records": [
            {"k": r.k, "abs_c": r.abs_c, "R_re": r.R_h.real, "R_im": r.R_h.imag, "dist_i": float(d),
             "significant": r.significant}
            for r, d in zip(recs, dist)
        ],
        "max_significant_distance": worst,
        "correlation": corr,
        "checks": checks,
        "status": _status(checks),
        "passed": _status(checks) != "fail",
    }


def negligible_error_checks(report: ShiftErrorReport, threshold: float = DEFAULT_THRESHOLDS["negligible_ratio"]) -> List[BoundCheck]:
    """Per-record ``phasecomp/real < threshold`` and ``phasecomp/imag < threshold``."""
    out = []
    for r in report.significant():
        ctx = {"j": r.j, "k": r.k, "h": report.h}
        for name, err in (("negligible_real", r.real_err), ("negligible_imag", r.imag_err)):
            if err == 0:
                out.append(BoundCheck.skipped(name, "degenerate", "zero branch error", **ctx))
            else:
                out.append(BoundCheck(name, r.complex_phasecomp / err, threshold, dict(ctx)))
    return out


# -- the verify suite -------------------------------------------------------------


@dataclass
class VerifyResult:
    groups: Dict[str, List[BoundCheck]]
    config: ExperimentConfig
    extra: dict = field(default_factory=dict)

    def failures(self) -> List[BoundCheck]:
        return [c for cs in self.groups.values() for c in cs if c.status == "fail"]

    def group_status(self, name: str) -> str:
        return _status(self.groups[name])

    @property
    def passed(self) -> bool:
        return not self.failures()

    def to_dict(self) -> dict:
        groups = {}
        for name in sorted(self.groups):
            cs = self.groups[name]
            groups[name] = {
                "status": self.group_status(name),
                "n_pass": sum(c.status == "pass" for c in cs),
                "n_fail": sum(c.status == "fail" for c in cs),
                "n_skipped": sum(not c.applicable for c in cs),
                "checks": [c.to_dict() for c in cs],
            }
        return {
            "schema": 1,
            "passed": self.passed,
            "config": self.config.to_dict(include_output=False),
            "groups": groups,
            "extra": self.extra,
        }

    def summary_lines(self) -> List[str]:
        lines = []
        for name in sorted(self.groups):
            cs = self.groups[name]
            status = self.group_status(name)
            n_fail = sum(c.status == "fail" for c in cs)
            lines.append(f"{name}: {status} ({len(cs) - n_fail}/{len(cs)} not failing)")
        return lines


def _na(name, reason):
    return [BoundCheck.skipped(name, NOT_APPLICABLE, reason)]


def verify_suite(config: ExperimentConfig) -> VerifyResult:
    """Run every check on the configured experiment."""
    pair = build_pair(config)
    grid = GridSpec.unit_interval(config.n_samples)
    f = build_signal(config, pair)
    t = config.thresholds
    report = run_shift_analysis(config, f, pair)
    groups: Dict[str, List[BoundCheck]] = {}
    extra: dict = {}

    fig2 = fig2_summary(report, t)
    groups["fig2_qualitative"] = fig2["checks"]
    if config.ratio_j in config.scales:
        fig3 = fig3_summary(report, config.ratio_j, t)
        groups["fig3_qualitative"] = fig3["checks"]
    else:
        groups["fig3_qualitative"] = _na("fig3", f"ratio_j={config.ratio_j} outside j_range")
    groups["negligible_ratios"] = negligible_error_checks(report, t["negligible_ratio"])

    # error-ratio bounds: sensitivities on the documented grid plus the report's h
    if config.h != 0 and config.phi in ("carrier", "corrected"):
        sens = {}
        for j in report.scales:
            ks = [r.k for r in report.scale(j)]
            grid_h = sensitivity_grid(j, include=[config.h])
            for k, s in sensitivity_scale(f, pair, j, ks, grid_h, config.phi, config.omega0_override).items():
                sens[(j, k)] = s
        groups["error_ratio_bounds"] = error_ratio_bounds(report, sens)
    else:
        groups["error_ratio_bounds"] = _na("error_ratio_bounds", "h = 0")

    if pair.exactly_modulated and config.h != 0:
        groups["eh_closed_form"] = eh_closed_form_checks(report, t["eh_relative"])
        groups["sum_identity"] = sum_identity_checks(report, "stated", t["sum_identity"])
        groups["sum_identity_exact"] = sum_identity_checks(report, "exact", t["sum_identity"])
        limit_checks = []
        rich_ok = rich_total = 0
        for j in report.scales:
            sig = [r.k for r in report.significant(j)]
            if not sig:
                continue
            extrap = wh_eh_richardson(f, pair, j, sig)
            for k, ex in zip(sig, extrap):
                lim, cs = wh_eh_limit(f, pair, j, k)
                rel = abs(ex / lim - 1) if lim > 0 else math.inf
                rich_total += 1
                rich_ok += rel <= t["richardson"]
                limit_checks.append(BoundCheck("wh_eh_cauchy_schwarz", lim, cs, {"j": j, "k": k}))
        frac = rich_ok / rich_total if rich_total else math.nan
        limit_checks.append(
            BoundCheck("wh_eh_richardson_fraction", -frac, -t["richardson_fraction"], {"n": rich_total, "fraction": frac})
        )
        groups["wh_eh_limit"] = limit_checks
        kh, phi_eq = [], []
        # every record; the check itself decides where its hypotheses hold
        for r in report.records:
            kh.extend(kh_bound_check(f, pair, r.j, r.k, config.h))
        for r in report.significant():
            phi_eq.append(phi_equivalence_check(f, pair, r.j, r.k, config.h))
        groups["kh_bound"] = kh
        groups["phi_equivalence"] = phi_eq
    else:
        reason = "h = 0" if config.h == 0 else "pair not exactly modulated"
        for name in ("eh_closed_form", "sum_identity", "sum_identity_exact", "wh_eh_limit", "kh_bound", "phi_equivalence"):
            groups[name] = _na(name, reason)

    if pair.orthonormal and pair.exactly_modulated:
        coeffs = report.coeffs
        full = epsilon_identity(f, pair, coeffs, config.h)
        eps = [BoundCheck("epsilon_full", full.relative_error, t["epsilon_full"], full.to_dict())]
        for j in report.scales:
            r = max(report.scale(j), key=lambda r: r.abs_c)
            single = epsilon_identity(f, pair, coeffs, config.h, [j], {j: [r.k]})
            eps.append(BoundCheck("epsilon_singleton", single.relative_error, t["epsilon_singleton"], dict(single.to_dict(), j=j, k=r.k)))
        groups["epsilon_identity"] = eps
        extra["epsilon_sqrt_discrepancy"] = full.sqrt_discrepancy
        groups["parseval"] = [parseval_check(coeffs, f)]
    else:
        groups["epsilon_identity"] = _na("epsilon_identity", "pair not orthonormal")
        groups["parseval"] = _na("parseval", "pair not orthonormal")

    if pair.window.support is not None and pair.window.lipschitz is not None:
        groups["decay_bound"] = decay_bound_check(f, pair, config.scales, config.h_sweep, floor=config.significance_floor)
    else:
        groups["decay_bound"] = _na("decay_bound", "window is not compactly supported")

    extra["pair"] = pair.describe()
    return VerifyResult(groups, config, extra)
