"""Command-line harness: ``dtcwt-shift <command> [options]``.

Commands write CSV tables, JSON summaries, gnuplot scripts and the exact
configuration used into ``--out``.  Exit status: 0 when every applicable check
passes, 1 on a check failure, 2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from .checks import BoundCheck
from .experiment import (
    ConfigError,
    ExperimentConfig,
    build_pair,
    build_signal,
    fig2_summary,
    fig3_summary,
    run_shift_analysis,
    negligible_error_checks,
    verify_suite,
)
from .io import signal_to_csv, write_pair_sidecar, write_signal_binary
from .wavelet_atoms import PairConstructionError, extract_modulation

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return v


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, BoundCheck):
        return obj.to_dict()
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else (None if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_json_clean(obj.real), _json_clean(obj.imag)]
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


class Output:
    """Single writer for one command's files, in call order."""

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def text(self, name: str, content: str):
        (self.root / name).write_text(content, encoding="utf-8")
        self.written.append(name)


# -- gnuplot emitters --------------------------------------------------------------


def _gp_signal(csv_name: str, title: str) -> str:
    return (
        "set datafile separator ','\n"
        f"set title '{title}'\n"
        "set xlabel 'x'\nset key off\n"
        f"plot '{csv_name}' every ::1 using 1:2 with steps lw 2\n"
    )


def _gp_fig2(scales) -> str:
    lines = [
        "set datafile separator ','",
        "set key top right",
        "set xlabel 'k'",
        f"set multiplot layout {len(scales)},2",
    ]
    for j in scales:
        name = f"shift_errors_j{j}.csv"
        lines += [
            f"set title 'j = {j}: phase-compensated vs optimal'",
            f"plot '{name}' every ::1 using 1:3 with linespoints title 'complex-phasecomp', "
            f"'' every ::1 using 1:2 with linespoints title 'complex-optimal'",
            f"set title 'j = {j}: with branch errors'",
            f"plot '{name}' every ::1 using 1:3 with linespoints title 'complex-phasecomp', "
            f"'' every ::1 using 1:2 with linespoints title 'complex-optimal', "
            f"'' every ::1 using 1:4 with linespoints title 'real', "
            f"'' every ::1 using 1:5 with linespoints title 'imag'",
        ]
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def _gp_fig3(csv_name: str, j: int) -> str:
    return (
        "set datafile separator ','\n"
        f"set title 'R_h at j = {j}'\n"
        "set xlabel 'Re R_h'\nset ylabel 'Im R_h'\nset size ratio -1\n"
        "set object circle at 0,1 size 0.5 fc rgb 'gray' fs transparent solid 0.2 noborder\n"
        f"plot '{csv_name}' every ::1 using 3:4:(0.02+0.2*$2) with circles title '|c| scaled', "
        "'+' using (0):(1) with points pt 2 ps 2 title 'i'\n"
    )


# -- commands ------------------------------------------------------------------------


def cmd_block_signal(config: ExperimentConfig, out: Output, args) -> int:
    f = build_signal(config)
    out.text("config.json", config.to_json() + "\n")
    out.text("signal.csv", signal_to_csv(f))
    out.text("signal.gp", _gp_signal("signal.csv", f.label or "signal"))
    if getattr(args, "binary", False):
        write_signal_binary(f, out.root / "signal.dtsg")
        out.written.append("signal.dtsg")
    print(f"signal: {f.grid.n_samples} samples written to {out.root / 'signal.csv'}")
    return EXIT_OK


def cmd_shift_analysis(config: ExperimentConfig, out: Output, args) -> int:
    report = run_shift_analysis(config)
    fig2 = fig2_summary(report, config.thresholds)
    negligible = negligible_error_checks(report, config.thresholds["negligible_ratio"])
    out.text("config.json", config.to_json() + "\n")
    out.text("shift_errors.csv", report.to_csv())
    for j in report.scales:
        rows = [
            (r.k, r.complex_optimal, r.complex_phasecomp, r.real_err, r.imag_err, r.abs_c, r.significant)
            for r in report.scale(j)
        ]
        out.text(
            f"shift_errors_j{j}.csv",
            _csv(["k", "complex-optimal", "complex-phasecomp", "real", "imag", "abs_c", "significant"], rows),
        )
    out.text("fig2.gp", _gp_fig2(report.scales))
    summary = {
        "schema": 1,
        "h": report.h,
        "phi_policy": report.phi_policy,
        "omega0_used": report.omega0_used,
        "significance_floor": report.significance_floor,
        "thresholds": config.thresholds,
        "pair": report.pair,
        "warnings": report.warnings,
        "fig2_qualitative": fig2["status"],
        "fig2": {k: v for k, v in fig2.items() if k != "checks"},
        "fig2_checks": fig2["checks"],
        "negligible_ratios": "pass" if all(c.passed for c in negligible if c.applicable) else "fail",
        "negligible_error_checks": negligible,
    }
    out.text("summary.json", _dump_json(summary))
    for c in fig2["checks"]:
        print(c.summary())
    print(f"fig2_qualitative: {summary['fig2_qualitative']}")
    return EXIT_OK if fig2["passed"] else EXIT_FAIL


def cmd_ratio_plot(config: ExperimentConfig, out: Output, args) -> int:
    j = config.ratio_j
    cfg = ExperimentConfig.from_dict({**config.to_dict(), "j_range": [j, j]})
    report = run_shift_analysis(cfg)
    fig3 = fig3_summary(report, j, cfg.thresholds)
    rows = []
    for r in report.scale(j):
        flags = list(r.flags) + ([] if r.significant else ["low_magnitude"])
        rows.append((r.k, r.abs_c, r.R_h.real, r.R_h.imag, abs(r.R_h - 1j), r.significant, ";".join(flags)))
    name = f"ratio_j{j}.csv"
    out.text("config.json", config.to_json() + "\n")
    out.text(name, _csv(["k", "abs_c", "R_re", "R_im", "dist_i", "significant", "flags"], rows))
    out.text("fig3.gp", _gp_fig3(name, j))
    summary = {
        "schema": 1,
        "j": j,
        "h": report.h,
        "pair": report.pair,
        "fig3_qualitative": fig3["status"],
        "correlation": fig3["correlation"],
        "max_significant_distance": fig3["max_significant_distance"],
        "checks": fig3["checks"],
    }
    out.text("summary.json", _dump_json(summary))
    for c in fig3["checks"]:
        print(c.summary())
    print(f"fig3_qualitative: {summary['fig3_qualitative']}")
    return EXIT_OK if fig3["passed"] else EXIT_FAIL


def cmd_verify(config: ExperimentConfig, out: Output, args) -> int:
    result = verify_suite(config)
    out.text("config.json", config.to_json() + "\n")
    out.text("verify.json", _dump_json(result.to_dict()))
    rows = []
    for name in sorted(result.groups):
        for c in result.groups[name]:
            rows.append((name, c.name, c.status, c.lhs, c.rhs, c.margin, c.context.get("j", ""), c.context.get("k", "")))
    out.text("verify_checks.csv", _csv(["group", "check", "status", "lhs", "rhs", "margin", "j", "k"], rows))
    for line in result.summary_lines():
        print(line)
    failures = result.failures()
    if failures:
        names = sorted({c.name for c in failures})
        print(f"FAILED: {len(failures)} checks ({', '.join(names)})")
        return EXIT_FAIL
    print("all applicable checks passed")
    return EXIT_OK


def cmd_wavelet_info(config: ExperimentConfig, out: Output, args) -> int:
    pair = build_pair(config)
    grid = pair.default_grid(4096)
    psi, psi_p = pair.atoms(grid, 0, [0])
    est = extract_modulation(pair)
    info = {"schema": 1, "pair": pair.describe(), "modulation_estimate": {
        "omega0": est.omega0, "xi0": est.xi0, "partial": est.partial, "n_segments": est.n_segments}}
    out.text("config.json", config.to_json() + "\n")
    write_pair_sidecar(pair, out.root / "pair.json")
    out.written.append("pair.json")
    out.text("wavelet.csv", _csv(["x", "psi", "psi_prime"], zip(grid.x, psi[0], psi_p[0])))
    out.text(
        "wavelet.gp",
        "set datafile separator ','\nset title 'mother wavelet pair'\n"
        "plot 'wavelet.csv' every ::1 using 1:2 with lines title 'psi', '' every ::1 using 1:3 with lines title \"psi'\"\n",
    )
    sys.stdout.write(_dump_json(info))
    return EXIT_OK


COMMANDS = {
    "block-signal": cmd_block_signal,
    "shift-analysis": cmd_shift_analysis,
    "ratio-plot": cmd_ratio_plot,
    "verify": cmd_verify,
    "wavelet-info": cmd_wavelet_info,
}


# -- argument handling -----------------------------------------------------------


def _parse_j(text: str):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return ("range", [int(lo), int(hi)])
    return ("single", int(text))


def _floor(text: str) -> float:
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("floor must lie in [0, 1]")
    return v


def _h(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _add_common(p: argparse.ArgumentParser, default) -> None:
    g = p.add_argument_group("experiment options")
    g.add_argument("--config", default=default, help="JSON configuration file")
    g.add_argument("--out", default=default, help="output directory")
    g.add_argument("--pair", default=default, choices=["gabor", "shannon", "raised_cosine"])
    g.add_argument("--n", default=default, type=int, help="number of samples")
    g.add_argument("--h", default=default, type=_h, help="translation (e.g. 1/512)")
    g.add_argument("--j", default=default, type=_parse_j, help="scale for ratio-plot, or j_min:j_max")
    g.add_argument("--phi", default=default, choices=["carrier", "corrected"])
    g.add_argument("--floor", default=default, type=_floor, help="significance floor in [0, 1]")
    g.add_argument("--seed", default=default, type=int)
    g.add_argument("--omega0-override", default=default, type=float, dest="omega0_override",
                   help="carrier frequency used for phase compensation only")
    g.add_argument("--sigma", default=default, type=float, help="Gaussian window width for the gabor pair")
    g.add_argument("--atom", default=default, help="use the atom J,K as signal")
    g.add_argument("--signal-file", default=default, help="read the signal from CSV or binary file")


def build_parser() -> argparse.ArgumentParser:
    """Options are accepted both before and after the command name."""
    parser = argparse.ArgumentParser(prog="dtcwt-shift", description=__doc__.splitlines()[0])
    _add_common(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p, argparse.SUPPRESS)
        if name == "block-signal":
            p.add_argument("--binary", action="store_true", help="also write the binary format")
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    d = base.to_dict()
    if getattr(args, "pair", None):
        d["pair"] = {"name": args.pair} if args.pair != d["pair"].get("name") else d["pair"]
        if args.pair == "gabor":
            d["pair"] = {"name": "gabor", "omega0": 5.3, "xi0": 5.2, **{k: v for k, v in d["pair"].items() if k != "name"}}
    if getattr(args, "sigma", None) is not None:
        if d["pair"].get("name") != "gabor":
            raise ConfigError("--sigma applies to the gabor pair only")
        d["pair"] = {**d["pair"], "sigma": args.sigma}
    for key, attr in (("n_samples", "n"), ("h", "h"), ("phi", "phi"), ("significance_floor", "floor"),
                      ("seed", "seed"), ("omega0_override", "omega0_override"), ("output_dir", "out")):
        v = getattr(args, attr, None)
        if v is not None:
            d[key] = v
    j = getattr(args, "j", None)
    if j is not None:
        kind, val = j
        if kind == "range":
            d["j_range"] = val
        else:
            d["ratio_j"] = val
    if getattr(args, "atom", None):
        try:
            jj, kk = (int(v) for v in args.atom.split(","))
        except ValueError:
            raise ConfigError("--atom expects J,K") from None
        d["signal"] = {"kind": "atom", "j": jj, "k": kk}
    if getattr(args, "signal_file", None):
        d["signal"] = {"kind": "file", "path": args.signal_file}
    return ExperimentConfig.from_dict(d)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        config = config_from_args(args)
        out = Output(Path(config.output_dir))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](config, out, args)
    except (ConfigError, PairConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
