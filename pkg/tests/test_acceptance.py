"""Acceptance criteria, one test each.

Every test records a single ``CRITERION n: PASS|FAIL ...`` line; the block is
printed at the end of the session (see ``conftest.pytest_terminal_summary``)
and inline when run with ``-s``. Tolerances below are fixed and must not be
loosened to make a criterion pass.

    pytest tests/test_acceptance.py -v
"""
import time

import numpy as np
import pytest

from essrk import integrate
from essrk.composition import build_schedule, gamma_for
from essrk.diagnostics import (
    action_quadrature_residual,
    convergence_order,
    method_symplecticity,
    secular_trend,
    shadowing_residual,
)
from essrk.experiments import ensemble_preset, get_preset
from essrk.fields import ParametricField, TokamakField
from essrk.system import EnsembleSystem, PhaseState
from essrk.tableau import MIDPOINT, RK4

from conftest import random_states, single

# criterion 1
SYMPLECTIC_TOL = 1e-5
SYMPLECTIC_ORDERS = (2, 4, 6)
SYMPLECTIC_STEPS = (0.05, 0.5)
SYMPLECTIC_SAMPLES = 20
# criterion 2
SLOPE_TOL = 0.2
MIN_H_SPAN = 8
ORDER_H_LISTS = {
    2: (0.4, 0.2, 0.1, 0.05),
    4: (0.4, 0.2, 0.1, 0.05),
    # the sixth-order error constant is large enough that h > 0.15 is pre-asymptotic
    6: (0.125, 0.0625, 0.03125, 0.015625),
}
ORDER_T = 10.0
# criterion 3
E_END_PAPER = 0.7078
E_END_REL_TOL = 0.01
# criterion 4
AMPLITUDE_RATIO_MAX = 0.1
PHASE_RATIO_MAX = 0.5
# criterion 5
TOKAMAK_T = 1000.0
TOKAMAK_E_REL_TOL = 1e-2
TREND_FRACTION = 0.25  # |fitted drift| <= this * detrended peak-to-peak
HALF_GROWTH = 1.1  # max deviation, second half vs first half
RK4_DRIFT_FACTOR = 10.0
RK4_WINDOWS = 20
# criterion 6
SHADOW_TOL = 1e-4
RATIO_REL_TOL = 0.2
RATIO_H = (0.4, 0.2)
# criterion 8
DECOUPLE_TOL = 1e-13

RESULTS = {}


def record(n, passed, detail):
    line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return passed


PAPER_FIELDS = {"parametric": ParametricField(1e-4, 1.0), "tokamak": TokamakField()}


def test_criterion_1_symplecticity():
    rng = np.random.default_rng(2024)
    worst_es, worst_margin, n_inputs, failures = 0.0, np.inf, 0, []
    for name, field in PAPER_FIELDS.items():
        sys_ = single(field)
        for s in random_states(rng, SYMPLECTIC_SAMPLES, name):
            for h in SYMPLECTIC_STEPS:
                rk = method_symplecticity("rk4", s, h, sys_)
                for p in SYMPLECTIC_ORDERS:
                    es = method_symplecticity(f"essrk{p}", s, h, sys_)
                    n_inputs += 1
                    worst_es = max(worst_es, es)
                    worst_margin = min(worst_margin, rk / es)
                    if not (es <= SYMPLECTIC_TOL and rk > es):
                        failures.append((name, h, p, es, rk))
    ok = record(
        1, not failures,
        f"{n_inputs} inputs, max ESSRK defect {worst_es:.2e} (tol {SYMPLECTIC_TOL:g}), "
        f"min RK4/ESSRK defect ratio {worst_margin:.1f}, violations {len(failures)}",
    )
    assert ok, failures[:5]


def test_criterion_2_order():
    slopes, bad = {}, []
    for preset in ("paper-parametric", "paper-tokamak"):
        pr = get_preset(preset)
        for p, hs in ORDER_H_LISTS.items():
            assert max(hs) / min(hs) >= MIN_H_SPAN
            res = convergence_order(f"essrk{p}", pr.system, pr.initial, hs, ORDER_T)
            slopes[(preset, p)] = res.slope
            if abs(res.slope - p) > SLOPE_TOL:
                bad.append((preset, p, res.slope))
    detail = ", ".join(f"{k[0].split('-')[1]}/essrk{k[1]}={v:.3f}" for k, v in slopes.items())
    assert record(2, not bad, f"slopes {detail} (tol +-{SLOPE_TOL})"), bad


def test_criterion_3_parametric_energy(parametric_benchmark, parametric_reports):
    es = parametric_reports["essrk4"].final_energy
    rk = parametric_reports["rk4"].final_energy
    rel = abs(es - E_END_PAPER) / E_END_PAPER
    pr = get_preset("paper-parametric")
    t0 = time.perf_counter()
    integrate(pr.initial, "essrk4", pr.h, pr.n_steps, pr.system)
    runtime = time.perf_counter() - t0
    ok = rel <= E_END_REL_TOL and rk < es
    assert record(
        3, ok,
        f"ESSRK E(end)={es:.6f} rel dev {rel:.2e} (tol {E_END_REL_TOL}), RK4 E(end)={rk:.6f} < ESSRK, "
        f"benchmark E(end)={parametric_benchmark.energies(pr.system)[-1]:.6f}, ESSRK run {runtime:.2f}s",
    )


def test_criterion_4_amplitude_phase(parametric_reports):
    es, rk = parametric_reports["essrk4"], parametric_reports["rk4"]
    amp = es.amplitude_error_series[-1, 1] / rk.amplitude_error_series[-1, 1]
    ph = es.phase_error_series[-1, 1] / rk.phase_error_series[-1, 1]
    ok = amp <= AMPLITUDE_RATIO_MAX and ph <= PHASE_RATIO_MAX
    assert record(
        4, ok,
        f"amplitude err ESSRK {es.amplitude_error_series[-1, 1]:.2e} vs RK4 {rk.amplitude_error_series[-1, 1]:.2e} "
        f"(ratio {amp:.2e} <= {AMPLITUDE_RATIO_MAX}), phase err {es.phase_error_series[-1, 1]:.3e} vs "
        f"{rk.phase_error_series[-1, 1]:.3e} (ratio {ph:.3f} <= {PHASE_RATIO_MAX})",
    )


def test_criterion_5_tokamak(tokamak_reports):
    pr = get_preset("paper-tokamak")
    assert pr.T == TOKAMAK_T
    es, rk = tokamak_reports["essrk4"], tokamak_reports["rk4"]
    traj = es.extra["trajectory"]
    E = es.energy_series[:, 1]
    dev = np.abs(E - E[0]) / abs(E[0])
    drift, osc = secular_trend(es.energy_series)
    half = dev.size // 2
    bounded = bool(np.all(np.isfinite(traj.q))) and np.max(np.linalg.norm(traj.q, axis=-1)) < 10.0
    no_trend = abs(drift) <= TREND_FRACTION * osc and dev[half:].max() <= HALF_GROWTH * dev[:half].max()

    Er = rk.energy_series[:, 1]
    windows = np.array([w.mean() for w in np.array_split(Er - Er[0], RK4_WINDOWS)])
    monotone = bool(np.all(np.diff(windows) < 0) or np.all(np.diff(windows) > 0))
    es_final = abs(E[-1] - E[0])
    rk_final = abs(Er[-1] - Er[0])
    ok = bounded and dev.max() <= TOKAMAK_E_REL_TOL and no_trend and monotone and rk_final >= RK4_DRIFT_FACTOR * es_final
    assert record(
        5, ok,
        f"max|q|={np.max(np.linalg.norm(traj.q, axis=-1)):.2f}, max rel dE {dev.max():.2e} (tol {TOKAMAK_E_REL_TOL}), "
        f"trend {drift:.1e} vs osc {osc:.1e}, RK4 monotone={monotone}, RK4/ESSRK final |dE| {rk_final / es_final:.1f} (>= {RK4_DRIFT_FACTOR})",
    )


def test_criterion_6_appendix_oracles():
    s_par = get_preset("paper-parametric").initial
    s_tok = get_preset("paper-tokamak").initial
    probes = [
        (single(PAPER_FIELDS["parametric"]), s_par),
        (single(PAPER_FIELDS["parametric"]), PhaseState([[0.4, -1.0, 0.3]], [[0.2, 0.1, -0.3]], 2.0)),
        (single(PAPER_FIELDS["tokamak"]), s_tok),
        (single(PAPER_FIELDS["tokamak"]), PhaseState([[0.3, 2.0, 0.2]], [[0.05, -0.1, 0.02]], 3.0)),
    ]
    shadow = max(shadowing_residual(sys_, s, t1=s.t + 1.0) for sys_, s in probes)
    ratios, bad = [], []
    for sys_, s in probes:
        for tab, expect in ((MIDPOINT, 8.0), (RK4, 32.0)):
            r = action_quadrature_residual(sys_, s, tab, RATIO_H[0]) / action_quadrature_residual(sys_, s, tab, RATIO_H[1])
            ratios.append(r)
            if abs(r / expect - 1) > RATIO_REL_TOL:
                bad.append((tab.name, r))
    ok = shadow <= SHADOW_TOL and not bad
    assert record(
        6, ok,
        f"max shadowing residual {shadow:.2e} (tol {SHADOW_TOL:g}), RK2 ratios "
        f"{', '.join(f'{r:.2f}' for r in ratios[0::2])} vs 8, RK4 ratios {', '.join(f'{r:.2f}' for r in ratios[1::2])} vs 32",
    ), bad


def test_criterion_7_structure():
    counts = {p: (len(build_schedule(p).segments), build_schedule(p).kick_count) for p in (2, 4, 6)}
    g = gamma_for(2)
    sch = build_schedule(4)
    drifts_ok = np.array_equal(sch.drift_fractions(), np.array([g / 2, (1 - g) / 2, (1 - g) / 2, g / 2]))
    kicks_ok = np.array_equal(sch.kick_intervals(), np.array([[0, g], [g, 1 - g], [1 - g, 1]]))
    ok = counts == {2: (3, 1), 4: (7, 3), 6: (19, 9)} and drifts_ok and kicks_ok
    assert record(7, ok, f"segments/kicks {counts}, p=4 drift fractions exact={drifts_ok}, kick intervals exact={kicks_ok}")


def test_criterion_8_ensemble():
    pr = ensemble_preset()
    defect = method_symplecticity("essrk4", pr.initial, pr.h, pr.system)
    dim = pr.initial.flat().size

    free = ensemble_preset(kappa=0.0)
    joint = integrate(free.initial, "essrk4", free.h, free.n_steps, free.system)
    gap = 0.0
    for j in range(2):
        sys1 = EnsembleSystem(free.system.particles[j : j + 1], free.system.fields[j])
        s1 = PhaseState(free.initial.q[j : j + 1], free.initial.p[j : j + 1], 0.0)
        one = integrate(s1, "essrk4", free.h, free.n_steps, sys1)
        gap = max(gap, np.max(np.abs(joint.q[:, j] - one.q[:, 0])), np.max(np.abs(joint.p[:, j] - one.p[:, 0])))
    ok = dim == 12 and defect <= SYMPLECTIC_TOL and gap <= DECOUPLE_TOL
    assert record(8, ok, f"{dim}-dim symplecticity defect {defect:.2e} (tol {SYMPLECTIC_TOL:g}), kappa=0 decoupling gap {gap:.1e} (tol {DECOUPLE_TOL:g})")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
