"""End-to-end acceptance checks at their stated tolerances.

Each test records one PASS/FAIL line (echoed at the end of the run) and then
asserts.  Nothing is relaxed: a criterion that does not hold fails here.
"""
import math
import time
import warnings

import numpy as np
from conftest import ACCEPTANCE_LINES, H
from dtcwt_shift.cli import main
from dtcwt_shift.dtcwt import analyze, predict_dyadic_shift
from dtcwt_shift.experiment import ExperimentConfig, fig2_summary, fig3_summary, run_shift_analysis
from dtcwt_shift.shift_metrics import (
    decay_bound_check,
    eh_closed_form_checks,
    epsilon_identity,
    error_ratio_bounds,
    kh_bound_check,
    sensitivity_grid,
    sensitivity_scale,
    shift_errors,
    sum_identity_checks,
    wh_eh_limit,
    wh_eh_richardson,
)
from dtcwt_shift.signal_core import (
    SampledSignal,
    fractional_hilbert,
    hilbert_transform,
    inner_product,
)


class Criterion:
    """Collects clauses and the runtime of one criterion."""

    def __init__(self, number, title, budget=None):
        self.number, self.title, self.budget = number, title, budget
        self.clauses = []
        self.t0 = time.perf_counter()

    def check(self, name, ok, detail=""):
        self.clauses.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        if self.budget is not None:
            self.check("runtime", elapsed < self.budget, f"{elapsed:.2f}s < {self.budget}s")
        failed = [c for c in self.clauses if not c[1]]
        status = "PASS" if not failed else "FAIL"
        parts = "; ".join(f"{n}{'' if ok else ' FAILED'}: {d}" for n, ok, d in self.clauses)
        line = f"criterion {self.number:2d} {status} {self.title} | {parts}"
        ACCEPTANCE_LINES[self.number] = line
        print(line)
        assert not failed, line


def quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*a, **kw)


def test_criterion_01_operator_identities(grid512, rng):
    cr = Criterion(1, "operator identities", budget=1.0)
    tol = 1e-9
    # zero-mean noise without the unpaired Nyquist bin, which H maps to 0
    spec = np.fft.rfft(rng.standard_normal(512))
    spec[0] = spec[-1] = 0
    f = SampledSignal(np.fft.irfft(spec, 512), grid512)
    hf = hilbert_transform(f)
    e1 = np.max(np.abs(hilbert_transform(hf).samples + f.samples))
    cr.check("H(Hf)=-f", e1 < tol, f"{e1:.1e}")
    e2 = abs(inner_product(f, hf))
    cr.check("<f,Hf>=0", e2 < tol, f"{e2:.1e}")
    e3 = np.max(np.abs(fractional_hilbert(f, 0).samples - f.samples))
    cr.check("H_0=I", e3 < tol, f"{e3:.1e}")
    e4 = np.max(np.abs(fractional_hilbert(f, -0.5).samples - hf.samples))
    cr.check("H_-1/2=H", e4 < tol, f"{e4:.1e}")
    x = grid512.x
    w0 = 2 * math.pi * 5
    cosine = SampledSignal(np.cos(w0 * x), grid512)
    e5 = max(
        np.max(np.abs(fractional_hilbert(cosine, tau).samples - np.cos(w0 * x + math.pi * tau)))
        for tau in np.linspace(-1, 1, 9)
    )
    cr.check("H_tau cos", e5 < tol, f"{e5:.1e}")
    cr.finish()


def test_criterion_02_dyadic_shift_covariance(block, gabor):
    cr = Criterion(2, "dyadic shift covariance", budget=5.0)
    coeffs = analyze(block, gabor, (1, 6))
    worst = 0.0
    for j in coeffs.scales:
        for m in (-2, -1, 1, 2):
            shifted = analyze(block, gabor, [j], shift=m * 2.0**-j)
            worst = max(worst, float(np.max(np.abs(shifted.c(j) - predict_dyadic_shift(coeffs, j, m)))))
    cr.check("max |c^(2^-j m) - c[k+m]|", worst < 1e-8, f"{worst:.1e} < 1e-8")
    cr.finish()


def test_criterion_03_shift_error_comparison():
    cr = Criterion(3, "phase-compensated vs branch errors (default experiment)", budget=10.0)
    rep = quiet(run_shift_analysis, ExperimentConfig())
    s = fig2_summary(rep)
    cr.check("median pc/max(real,imag)", s["median_ratio"] < 0.2, f"{s['median_ratio']:.4f} < 0.2")
    worst = s["checks"][1].context
    cr.check(
        "max (pc-opt)/real",
        s["max_excess"] < 0.15,
        f"{s['max_excess']:.4f} < 0.15 at (j={worst.get('j')}, k={worst.get('k')})",
    )
    cr.finish()


def test_criterion_04_ratio_near_i(default_report):
    cr = Criterion(4, "R_h near i at j=3", budget=5.0)
    s = fig3_summary(default_report, 3)
    cr.check("max |R_h - i| (significant)", s["max_significant_distance"] < 0.5,
             f"{s['max_significant_distance']:.4f} < 0.5")
    cr.check("corr(|c|, -|R_h - i|) > 0", s["correlation"] > 0, f"{s['correlation']:.4f}")
    cr.finish()


def test_criterion_05_error_ratio_bounds(block, gabor, default_report):
    cr = Criterion(5, "error-ratio bounds via translation sensitivity", budget=30.0)
    sens = {}
    for j in default_report.scales:
        ks = [r.k for r in default_report.scale(j)]
        for k, s in sensitivity_scale(block, gabor, j, ks, sensitivity_grid(j, include=[H])).items():
            sens[(j, k)] = s
    checks = error_ratio_bounds(default_report, sens)
    app = [c for c in checks if c.applicable]
    n_ok = sum(c.passed for c in app)
    phi_ok = all(s.Phi <= 2.0**s.j * gabor.omega0 * (1 + 1e-12) for s in sens.values())
    cr.check("bounds hold", app and n_ok == len(app), f"{n_ok}/{len(app)} non-degenerate")
    cr.check("Phi <= 2^j omega0", phi_ok)
    cr.finish()


def test_criterion_06_carrier_window_split(default_report):
    cr = Criterion(6, "closed-form E_h and carrier/window sum", budget=10.0)
    eh = eh_closed_form_checks(default_report, 1e-8)
    app = [c for c in eh if c.applicable]
    bad = [c for c in app if not c.passed]
    detail = f"{len(app) - len(bad)}/{len(app)} records"
    if bad:
        w = max(bad, key=lambda c: c.lhs)
        detail += f", worst rel {w.lhs:.1e} at |c|={w.context['abs_c']:.1e}"
    cr.check("|E_h| closed form rel < 1e-8", not bad, detail)
    si = [c for c in sum_identity_checks(default_report, "stated", 1e-8) if c.applicable]
    n_ok = sum(c.passed for c in si)
    med = float(np.median([c.lhs for c in si]))
    cr.check("E_h + W_h = 2e^{i xi0}(c - c^h) within 1e-8", n_ok == len(si),
             f"{n_ok}/{len(si)} records, median rel residual {med:.2e}")
    cr.finish()


def test_criterion_07_window_carrier_limit(block, gabor, default_report):
    cr = Criterion(7, "small-shift limit of |W_h/E_h|", budget=60.0)
    ok = total = 0
    cs_ok = True
    for j in default_report.scales:
        ks = [r.k for r in default_report.significant(j)]
        if not ks:
            continue
        for k, ex in zip(ks, wh_eh_richardson(block, gabor, j, ks)):
            lim, cs = wh_eh_limit(block, gabor, j, k)
            total += 1
            ok += abs(ex / lim - 1) <= 1e-3
            cs_ok &= ex <= cs and lim <= cs
    cr.check("Richardson within 1e-3", ok >= 0.95 * total, f"{ok}/{total} >= 95%")
    cr.check("never above Cauchy-Schwarz bound", cs_ok)
    cr.finish()


def test_criterion_08_kh_bound(block, gabor, default_report):
    cr = Criterion(8, "K_h bound and R_h-K_h identity", budget=30.0)
    results = []
    for r in default_report.records:
        results.extend(kh_bound_check(block, gabor, r.j, r.k, H))
    bound = [c for c in results if c.name == "K_h_bound" and c.applicable]
    ident = [c for c in results if c.name == "R_h_K_h_identity" and c.applicable]
    cr.check("|K_h| <= bound", bound and all(c.passed for c in bound),
             f"{sum(c.passed for c in bound)}/{len(bound)} where hypotheses hold")
    worst = max(c.lhs for c in ident)
    cr.check("R_h = i(1+K)/(1-K) within 1e-8", all(c.passed for c in ident), f"max {worst:.1e}")
    cr.finish()


def test_criterion_09_amplitude_phase_identity(block, shannon):
    cr = Criterion(9, "sum of squared phase-compensated errors (orthonormal pair)", budget=60.0)
    coeffs = analyze(block, shannon, (1, 6))
    full = epsilon_identity(block, shannon, coeffs, H)
    cr.check("full grid rel < 1e-4", full.relative_error < 1e-4, f"{full.relative_error:.1e}")
    worst = 0.0
    for j in coeffs.scales:
        for k in coeffs.ks[j]:
            single = epsilon_identity(block, shannon, coeffs, H, [j], {j: [int(k)]})
            if single.lhs > 0:
                worst = max(worst, single.relative_error)
    cr.check("singletons rel < 1e-6", worst < 1e-6, f"max {worst:.1e}")
    cr.check("sqrt-form discrepancy reported", math.isfinite(full.sqrt_discrepancy),
             f"sqrt form / lhs = {full.sqrt_discrepancy:.1f}")
    cr.finish()


def test_criterion_10_decay_bound(block, raised_cosine):
    cr = Criterion(10, "Lipschitz decay bound (raised cosine)", budget=60.0)
    checks = decay_bound_check(block, raised_cosine, (1, 6), [1 / 512, 1 / 1024, 1 / 2048])
    n_ok = sum(c.passed for c in checks)
    ratio = max(c.lhs / c.rhs for c in checks)
    defect = max(c.context["orthonormality_defect"] for c in checks)
    cr.check("ratio <= 2^j l (q-p)", checks and n_ok == len(checks), f"{n_ok}/{len(checks)}, max lhs/rhs {ratio:.3f}")
    cr.check("orthonormality defect reported", math.isfinite(defect), f"{defect:.3f}")
    cr.finish()


def test_criterion_11_negative_control(block, gabor):
    cr = Criterion(11, "negative control (compensation with omega0=4.0)", budget=10.0)
    rep = quiet(shift_errors, block, gabor, (1, 6), H, omega0=4.0)
    s = fig2_summary(rep)
    cr.check("criterion 3 fails", s["status"] == "fail",
             f"median {s['median_ratio']:.4f}, max excess {s['max_excess']:.4f}")
    cr.finish()


def test_criterion_12_determinism(tmp_path):
    cr = Criterion(12, "deterministic verify output")
    codes = [main(["verify", "--out", str(tmp_path / d)]) for d in ("a", "b")]
    same = all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
        for n in ("verify.json", "verify_checks.csv")
    )
    cr.check("byte-identical verify.json/verify_checks.csv", same and codes[0] == codes[1])
    cr.finish()
