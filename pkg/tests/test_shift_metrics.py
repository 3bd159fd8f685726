import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from dtcwt_shift.checks import DEGENERATE, NOT_APPLICABLE, BoundCheck
from dtcwt_shift.dtcwt import analyze
from dtcwt_shift.shift_metrics import (
    EpsilonReport,
    SensitivityEstimate,
    ShiftErrorReport,
    ShiftRecord,
    UndefinedRatioError,
    UnsolvableAngleError,
    UnsupportedPairError,
    alpha_beta,
    branch_ratio,
    carrier_phase,
    decay_bound_check,
    decay_bound_rhs,
    eh_closed_form_checks,
    epsilon_identity,
    error_ratio_bounds,
    kh_bound_check,
    kh_upper_bound,
    optimal_phase,
    phi_equivalence_check,
    ratio_R,
    sensitivity,
    sensitivity_grid,
    sensitivity_scale,
    shift_errors,
    sum_identity_checks,
    window_carrier_split,
    wh_eh_limit,
    wh_eh_richardson,
    wrap_angle,
)

from conftest import H

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def quiet(fn, *a, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*a, **kw)


# -- optimal phase -----------------------------------------------------------


def test_optimal_phase_examples():
    phi, err, deg = optimal_phase(1 + 0j, 1j)
    assert phi == pytest.approx(math.pi / 2) and err == pytest.approx(0.0, abs=1e-15) and not deg
    phi, err, deg = optimal_phase(2 + 0j, -1 + 0j)
    assert abs(phi) == pytest.approx(math.pi) and err == pytest.approx(1.0)
    phi, err, deg = optimal_phase(0j, 3 + 4j)
    assert deg and phi == 0.0 and err == 5.0


@settings(max_examples=40, deadline=None)
@given(finite, finite, finite, finite)
def test_optimal_phase_matches_grid_search(cr, ci, hr, hi):
    c, ch = complex(cr, ci), complex(hr, hi)
    if abs(c) < 1e-3:
        return
    phis = np.linspace(-math.pi, math.pi, 100_001)
    p0 = phis[np.argmin(np.abs(np.exp(1j * phis) * c - ch))]
    fine = np.linspace(p0 - 1e-4, p0 + 1e-4, 100_001)
    brute = np.min(np.abs(np.exp(1j * fine) * c - ch))
    phi, err, _ = optimal_phase(c, ch)
    assert err == pytest.approx(brute, abs=1e-6 * max(1.0, abs(c)))
    assert abs(np.exp(1j * phi) * c - ch) == pytest.approx(err, abs=1e-12 * max(1.0, abs(c) + abs(ch)))


def test_wrap_angle_range():
    x = np.linspace(-20, 20, 1001)
    w = wrap_angle(x)
    assert np.all(w > -math.pi - 1e-15) and np.all(w <= math.pi + 1e-15)
    assert np.allclose(np.exp(1j * w), np.exp(1j * x))


# -- branch ratio ----------------------------------------------------------


def test_branch_ratio_synthetic_unity():
    assert branch_ratio(1.0, 1.0, 0.5, 0.5, 0.0) == pytest.approx(1.0)
    assert branch_ratio(2.0, 1.0, 0.0, 0.0, 0.3) == pytest.approx(2.0)


def test_branch_ratio_zero_denominator():
    with pytest.raises(UndefinedRatioError) as info:
        branch_ratio(1.0, 1.0, 0.0, 1.0, 0.0)
    assert info.value.denominator == 0


def test_ratio_R_matches_report(block, gabor, default_report):
    r = default_report.significant(3)[0]
    assert ratio_R(block, gabor, 3, r.k, H, r.phi) == pytest.approx(r.R_h, rel=1e-12)


# -- the report ------------------------------------------------------------


def test_zero_shift_gives_zero_errors(block, gabor):
    rep = shift_errors(block, gabor, (2, 4), 0.0)
    for r in rep.records:
        assert r.complex_optimal == pytest.approx(0, abs=1e-14)
        assert r.complex_phasecomp == pytest.approx(0, abs=1e-14)
        assert r.real_err == pytest.approx(0, abs=1e-14) and r.imag_err == pytest.approx(0, abs=1e-14)
        assert "undefined_R" in r.flags or math.isnan(r.R_h.real) or abs(r.R_h) < math.inf


def test_record_invariants(default_report):
    for r in default_report.records:
        tol = 1e-12 * (r.abs_c + abs(r.c_h) + 1e-300)
        assert r.complex_optimal <= r.complex_phasecomp + tol
        assert r.complex_phasecomp <= r.abs_c + abs(r.c_h) + tol
        assert r.complex_optimal == pytest.approx(abs(r.abs_c - abs(r.c_h)), abs=tol)
        assert r.real_err == pytest.approx(2 * abs(r.c.real - r.c_h.real))


def test_shifted_coefficients_are_shifted_signal(block, gabor, default_report):
    from dtcwt_shift.signal_core import translate

    direct = analyze(translate(block, H), gabor, [3])
    got = np.array([r.c_h for r in default_report.scale(3)])
    assert np.max(np.abs(got - direct.c(3))) < 1e-12 * np.max(np.abs(got))


def test_significance_floor(default_report):
    for j in default_report.scales:
        recs = default_report.scale(j)
        cmax = max(r.abs_c for r in recs)
        for r in recs:
            assert r.significant == (r.abs_c >= 0.25 * cmax)


def test_large_shift_warns(block, gabor):
    with pytest.warns(RuntimeWarning, match="not below"):
        rep = shift_errors(block, gabor, (3, 3), 0.2)
    assert rep.warnings


def test_phi_policies(block, gabor):
    carrier = quiet(shift_errors, block, gabor, (3, 3), H)
    fixed = quiet(shift_errors, block, gabor, (3, 3), H, phi_policy=0.0)
    custom = quiet(shift_errors, block, gabor, (3, 3), H, phi_policy=lambda j, k, h: carrier_phase(j, 5.3, h))
    corrected = quiet(shift_errors, block, gabor, (3, 3), H, phi_policy="corrected")
    assert all(r.phi == pytest.approx(carrier_phase(3, gabor.omega0, H)) for r in carrier.records)
    assert all(r.phi == 0.0 for r in fixed.records)
    assert [r.phi for r in custom.records] == pytest.approx([r.phi for r in carrier.records])
    assert corrected.phi_policy == "corrected"
    assert any(abs(a.phi - b.phi) > 1e-6 for a, b in zip(corrected.records, carrier.records))
    with pytest.raises(ValueError):
        shift_errors(block, gabor, (3, 3), H, phi_policy="bogus")


def test_omega0_override_changes_only_compensation(block, gabor):
    base = quiet(shift_errors, block, gabor, (3, 3), H)
    off = quiet(shift_errors, block, gabor, (3, 3), H, omega0=4.0)
    assert off.omega0_used == 4.0
    for a, b in zip(base.records, off.records):
        assert a.c == b.c and a.complex_optimal == b.complex_optimal
        assert b.phi == pytest.approx(carrier_phase(3, 4.0, H))


def test_report_serialisation(default_report):
    d = json.loads(default_report.to_json())
    assert d["schema"] == 1 and len(d["records"]) == len(default_report.records)
    lines = default_report.to_csv().splitlines()
    assert lines[0].split(",")[:4] == ["j", "k", "abs_c", "significant"]
    assert len(lines) == len(default_report.records) + 1


# -- window / carrier split ------------------------------------------------


def test_split_vanishes_at_zero_shift(block, gabor):
    E, W = window_carrier_split(block, gabor, 3, 2, 0.0)
    assert E == 0 and abs(W) < 1e-15


def test_eh_closed_form_significant(default_report):
    checks = [c for c in eh_closed_form_checks(default_report, 1e-8) if c.context["abs_c"] > 1e-3]
    assert checks and all(c.passed for c in checks)


def test_sum_identity_exact_on_shannon(block, shannon):
    rep = quiet(shift_errors, block, shannon, (1, 6), H)
    checks = sum_identity_checks(rep, "exact", 1e-8)
    assert all(c.passed for c in checks if c.applicable)


def test_sum_identity_stated_residual_is_the_rotation_term(block, shannon):
    rep = quiet(shift_errors, block, shannon, (2, 4), H)
    for r, chk in zip(rep.records, sum_identity_checks(rep, "stated", 1e-8)):
        if not chk.applicable:
            continue
        theta = carrier_phase(r.j, shannon.omega0, H)
        target = abs(2 * np.exp(1j * shannon.xi0) * (r.c - r.c_h))
        predicted = abs((1 - np.exp(1j * theta)) * r.W_h) / target
        assert chk.lhs == pytest.approx(predicted, rel=1e-6, abs=1e-12)


def test_split_not_applicable_for_numerical_hilbert(block, raised_cosine):
    rep = quiet(shift_errors, block, raised_cosine, (3, 3), H)
    assert all(c.status == NOT_APPLICABLE for c in eh_closed_form_checks(rep))


# -- alpha / beta ----------------------------------------------------------


def test_alpha_beta_examples():
    assert alpha_beta(1.0, 0.0, 1.0, 3, 5.3, H)[0] == 0.0
    # |W| = 2|c|: 2 |e^{i a} - 1| = 2  =>  a = pi/3
    assert alpha_beta(1.0, 2.0, 1.0, 3, 5.3, H)[0] == pytest.approx(math.pi / 3)
    with pytest.raises(UnsolvableAngleError):
        alpha_beta(1.0, 4.5, 1.0, 3, 5.3, H)
    beta = alpha_beta(1.0, 0.0, 1.0, 3, 5.3, H)[1]
    assert beta == pytest.approx(wrap_angle(16 * 5.3 * H))


def test_alpha_consistent_with_window_term(default_report):
    for r in default_report.significant():
        if math.isnan(r.alpha_h):
            continue
        assert 2 * abs(np.exp(1j * r.alpha_h) - 1) * r.abs_c == pytest.approx(abs(r.W_h), rel=1e-8)


# -- sensitivity -----------------------------------------------------------


def test_sensitivity_grid_shape():
    g = sensitivity_grid(3, 16, include=[H])
    assert np.all(np.abs(g) < 2.0**-3) and 0 not in g and H in g


def test_sensitivity_scale_invariant(block, gabor):
    s1 = sensitivity(block, gabor, 3, 2)
    s2 = sensitivity(block * 2.0, gabor, 3, 2)
    assert s1.B_a == pytest.approx(s2.B_a, rel=1e-12) and s1.B_b == pytest.approx(s2.B_b, rel=1e-12)
    assert s1.Phi == s2.Phi


def test_sensitivity_positive_and_phi_bound(block, gabor, default_report):
    for j in (2, 3, 4):
        ks = [r.k for r in default_report.significant(j)]
        est = sensitivity_scale(block, gabor, j, ks)
        for s in est.values():
            assert s.B_a > 0 and s.B_b > 0
            assert s.Phi <= 2.0**j * gabor.omega0 * (1 + 1e-12)


def test_sensitivity_zero_when_shift_reproduces_coefficient(block, gabor):
    j, k = 3, 2
    a0 = analyze(block, gabor, [j], {j: [k]}).a[j][0]

    def diff(h):
        return analyze(block, gabor, [j], {j: [k]}, shift=h).a[j][0] - a0

    # away from the trivial root at h = 0
    hs = np.linspace(-(2.0**-j) * 0.999, -2e-3, 400)
    vals = np.array([diff(h) for h in hs])
    i = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    root = brentq(diff, hs[i], hs[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)
    est = sensitivity(block, gabor, j, k, h_grid=sensitivity_grid(j, include=[root]))
    assert "B_a_zero" in est.degenerate


def test_sensitivity_rejects_bad_grid(block, gabor):
    with pytest.raises(ValueError):
        sensitivity(block, gabor, 3, 2, h_grid=[0.0, H])
    with pytest.raises(ValueError):
        sensitivity(block, gabor, 3, 2, h_grid=[0.2])


def test_error_ratio_bounds_hold(block, gabor, default_report):
    sens = {}
    for j in (2, 3, 4):
        ks = [r.k for r in default_report.scale(j)]
        for k, s in sensitivity_scale(block, gabor, j, ks, sensitivity_grid(j, include=[H])).items():
            sens[(j, k)] = s
    sub = ShiftErrorReport(
        [r for r in default_report.significant() if r.j in (2, 3, 4)],
        H, "carrier", gabor.omega0, 0.25, gabor.describe(),
    )
    checks = error_ratio_bounds(sub, sens)
    applicable = [c for c in checks if c.applicable]
    assert applicable and all(c.passed for c in applicable)


def _synthetic_record(R):
    return ShiftRecord(3, 0, 1 + 0j, 1 + 0j, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, True, R_h=R)


def test_bound_collapses_when_ratio_is_i():
    rep = ShiftErrorReport([_synthetic_record(1j)], H, "carrier", 5.3, 0.25, {"label": "synthetic"})
    sens = {(3, 0): SensitivityEstimate(1.0, 1.0, 2.0, np.array([H]), 3, 0, [])}
    checks = error_ratio_bounds(rep, sens)
    assert [c.rhs for c in checks] == pytest.approx([0.0, 0.0])


def test_error_ratio_bounds_skip_zero_sensitivity():
    rep = ShiftErrorReport([_synthetic_record(2 + 0j)], H, "carrier", 5.3, 0.25, {"label": "synthetic"})
    sens = {(3, 0): SensitivityEstimate(0.0, 1.0, 2.0, np.array([H]), 3, 0, ["B_a_zero"])}
    checks = error_ratio_bounds(rep, sens)
    assert checks[0].status == DEGENERATE and checks[1].applicable


def test_error_ratio_bounds_need_h_in_grid():
    rep = ShiftErrorReport([_synthetic_record(2 + 0j)], H, "carrier", 5.3, 0.25, {"label": "synthetic"})
    sens = {(3, 0): SensitivityEstimate(1.0, 1.0, 2.0, np.array([2 * H]), 3, 0, [])}
    with pytest.raises(ValueError):
        error_ratio_bounds(rep, sens)


# -- |W/E| limit and K_h ---------------------------------------------------


def test_wh_eh_richardson_matches_limit(block, gabor, default_report):
    for j in (2, 3, 4):
        ks = [r.k for r in default_report.significant(j)]
        rich = wh_eh_richardson(block, gabor, j, ks)
        for k, r in zip(ks, rich):
            lim, cs = wh_eh_limit(block, gabor, j, k)
            assert r == pytest.approx(lim, rel=1e-3)
            assert lim <= cs


def test_kh_upper_bound_limits():
    assert kh_upper_bound(0.0, 0.1) == 0.0
    assert kh_upper_bound(1e-9, 0.1) < 1e-8
    assert kh_upper_bound(3.0, 0.1) == math.inf


def test_kh_bound_on_significant(block, gabor, default_report):
    for r in default_report.significant(3):
        kb, ident = kh_bound_check(block, gabor, 3, r.k, H)
        assert kb.passed and ident.passed


def test_kh_not_applicable_when_beta_near_pi(block, gabor):
    h = math.pi / (16 * gabor.omega0) * 0.999
    checks = kh_bound_check(block, gabor, 3, 2, h)
    assert all(c.status == NOT_APPLICABLE for c in checks)


def test_phi_equivalence(block, gabor, default_report):
    for r in default_report.significant(4):
        assert phi_equivalence_check(block, gabor, 4, r.k, H).passed


def test_alpha_over_h_tends_to_carrier_times_limit(block, gabor, default_report):
    j = 3
    h = 1e-4 * 2.0**-j
    for r in default_report.significant(j):
        E, W = window_carrier_split(block, gabor, j, r.k, h)
        c = analyze(block, gabor, [j], {j: [r.k]}).c(j)[0]
        alpha, _ = alpha_beta(E, W, c, j, gabor.omega0, h)
        lim, _ = wh_eh_limit(block, gabor, j, r.k)
        assert alpha / h == pytest.approx(2.0**j * gabor.omega0 * lim, rel=5e-3)


# -- amplitude-phase identity ----------------------------------------------


def test_epsilon_zero_shift(block, shannon):
    rep = epsilon_identity(block, shannon, None, 0.0, J=[2, 3])
    assert rep.lhs == pytest.approx(0, abs=1e-20) and rep.rhs == pytest.approx(0, abs=1e-20)


def test_epsilon_full_grid(block, shannon):
    coeffs = analyze(block, shannon, (1, 6))
    rep = epsilon_identity(block, shannon, coeffs, H)
    assert rep.relative_error < 1e-4
    assert rep.n_coefficients == sum(len(coeffs.ks[j]) for j in coeffs.scales)
    assert rep.sqrt_discrepancy == pytest.approx(math.sqrt(rep.rhs) / rep.lhs)


def test_epsilon_singleton(block, shannon):
    rep = epsilon_identity(block, shannon, None, H, J=[3], K=[3])
    assert rep.n_coefficients == 1 and rep.relative_error < 1e-6
    assert isinstance(rep, EpsilonReport) and set(rep.to_dict()) >= {"lhs", "rhs", "eps1", "eps2"}


def test_epsilon_requires_orthonormal(block, gabor):
    with pytest.raises(UnsupportedPairError):
        epsilon_identity(block, gabor, None, H, J=[3])


# -- decay bound -----------------------------------------------------------


def test_decay_rhs_doubles_per_scale():
    assert decay_bound_rhs(4, 2.0, -1, 1) == pytest.approx(2 * decay_bound_rhs(3, 2.0, -1, 1))
    assert decay_bound_rhs(0, 1.5, 0, 2) == 3.0


def test_decay_bound_holds(block, raised_cosine):
    checks = decay_bound_check(block, raised_cosine, (1, 6), [H, -H, H / 4])
    assert checks and all(c.passed for c in checks)
    assert all("orthonormality_defect" in c.context for c in checks)


def test_decay_bound_needs_compact_window(block, gabor):
    with pytest.raises(UnsupportedPairError):
        decay_bound_check(block, gabor, (3, 3), [H])


def test_boundcheck_skipped_never_passes():
    c = BoundCheck.skipped("x", DEGENERATE, "why")
    assert not c.passed and not c.applicable


# -- negligible phase-compensated error ------------------------------------


def test_phasecomp_negligible_against_branch_errors(default_report):
    """phasecomp/real and phasecomp/imag below 0.25 on every significant record."""
    from dtcwt_shift.experiment import negligible_error_checks

    checks = negligible_error_checks(default_report, 0.25)
    bad = [(c.name, c.context["j"], c.context["k"], round(c.lhs, 3)) for c in checks if c.status == "fail"]
    assert not bad, f"{len(bad)}/{len(checks)} ratios at or above 0.25: {bad}"


# -- exact pair: closed form and K_h hold on every record -------------------


def test_shannon_closed_form_and_kh_on_all_records(block, shannon):
    rep = quiet(shift_errors, block, shannon, (1, 6), H)
    eh = [c for c in eh_closed_form_checks(rep, 1e-8) if c.applicable]
    assert len(eh) == len(rep.records) and all(c.passed for c in eh)
    kh = [c for r in rep.records for c in kh_bound_check(block, shannon, r.j, r.k, H) if c.applicable]
    assert kh and all(c.passed for c in kh)
