"""Acceptance criteria 1-8, each at its stated tolerance.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line; the lines are
repeated in the terminal summary.
"""
import math
import time
import timeit

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from pathmark import algebra
from pathmark.algebra import PathBasis, PolBasis
from pathmark.harness import (convergence_sweep, cross_validate, load_catalog, run_scenario,
                              sample_photons)
from pathmark.optics import (ExperimentConfig, PolarizedField, apply_thin_lens, find_extrema,
                             make_aperture_field, make_grid, propagate)

SUITE_BUDGET_S = 60.0
_clock = {}


@pytest.fixture(scope="module", autouse=True)
def suite_clock():
    _clock["start"] = time.perf_counter()


def report(number, title, ok, detail, capsys):
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


@pytest.fixture(scope="module")
def catalog():
    return load_catalog()


def test_criterion_1_marker_table(capsys):
    def pipeline():
        final = algebra.apply_lens(algebra.make_initial_state(True))
        return algebra.detector_statistics(final, PolBasis.CIRCULAR)

    stats = pipeline()
    runtime = min(timeit.repeat(pipeline, number=1, repeat=50))
    expect = {("D_A", "L"): 0.5, ("D_B", "R"): 0.5, ("D_A", "R"): 0.0, ("D_B", "L"): 0.0}
    err = max(abs(stats[k] - v) for k, v in expect.items())
    ok = err <= 1e-12 and runtime < 1e-3
    report(1, "exact marker table", ok, f"max error {err:.1e} (<= 1e-12), runtime {runtime * 1e3:.3f} ms (< 1 ms)",
           capsys)


def test_criterion_2_eraser_table(capsys):
    final = algebra.pol_basis_change(algebra.apply_lens(algebra.make_initial_state(True)), PolBasis.LINEAR)
    stats = algebra.detector_statistics(final)
    err = max(abs(v - 0.25) for v in stats.values())
    p, collapsed = algebra.project_polarization(final, "H")
    cond = algebra.detector_statistics(collapsed)
    pa, pb = cond[("D_A", "H")] + cond[("D_A", "V")], cond[("D_B", "H")] + cond[("D_B", "V")]
    cond_err = max(abs(pa - 0.5), abs(pb - 0.5))
    ok = len(stats) == 4 and err <= 1e-12 and cond_err <= 1e-12
    report(2, "exact eraser table", ok,
           f"max |P - 1/4| {err:.1e}, conditioned on H P(D_A)={pa:.12f} P(D_B)={pb:.12f}", capsys)


def test_criterion_3_single_slit(catalog, capsys):
    t0 = time.perf_counter()
    r = run_scenario(catalog["item1-A-only"])
    runtime = time.perf_counter() - t0
    pa, pb = r.summary.p("D_A"), r.summary.p("D_B")
    ok = pa > 0.95 and pb < 0.01 and runtime < 5.0
    report(3, "single slit", ok, f"P(D_A)={pa:.5f} (> 0.95), P(D_B)={pb:.2e} (< 0.01), runtime {runtime:.2f} s (< 5 s)",
           capsys)


def test_criterion_4_wire_transparency(catalog, capsys):
    both = run_scenario(catalog["item4-both-wires"])
    delta = both.summary.detected - both.baseline.detected
    single = run_scenario(catalog["item2-A-only-wires"])
    s = single.summary
    loss = single.baseline.detected - s.detected
    ok = (len(both.config.wires) == 6 and abs(delta) < 0.01
          and s.absorbed_fraction >= 0.8 * s.fill_factor)
    report(4, "dark-fringe wires", ok,
           f"both slits dP={delta:+.5f} (|dP| < 0.01); single slit absorbed {s.absorbed_fraction:.4f} "
           f">= 0.8 x fill {s.fill_factor:.4f}, detector loss {loss:.4f}", capsys)


def test_criterion_5_anticorrelation(capsys):
    cfg = ExperimentConfig(markers=True)
    f = propagate(make_aperture_field(cfg), cfg.z_lens)
    period = cfg.fringe_period
    win = np.abs(f.x) <= period / 2
    vis = {}
    for p in ("H", "V", "total"):
        seg = f.intensity(p)[win]
        vis[p] = (seg.max() - seg.min()) / (seg.max() + seg.min())
    ih, iv, tot = f.intensity("H"), f.intensity("V"), f.intensity("total")
    h_min = find_extrema(f.x, ih, 6, period, "min")
    v_max = find_extrema(f.x, iv / tot, 6, period, "max")
    shift = np.abs(h_min - v_max).max() / f.dx
    ok = vis["H"] > 0.9 and vis["V"] > 0.9 and vis["total"] < 0.02 and shift <= 1.0
    report(5, "erasure anti-correlation", ok,
           f"V_H={vis['H']:.4f} V_V={vis['V']:.4f} (> 0.9), V_total={vis['total']:.4f} (< 0.02), "
           f"H-min vs V-max {shift:.3f} cells (<= 1)", capsys)


def test_criterion_6_cross_validation(catalog, capsys):
    worst, details = 0.0, []
    monotone = True
    for name in ("marked-circular", "eraser-linear"):
        rows = cross_validate(catalog[name])
        worst = max(worst, max(r.delta for r in rows))
        sweep = [d for _, _, d in convergence_sweep(catalog[name], levels=3)]
        monotone &= all(a > b for a, b in zip(sweep, sweep[1:]))
        details.append(f"{name} " + " > ".join(f"{d:.4f}" for d in sweep))
    ok = worst < 0.02 and monotone
    report(6, "exact vs wave", ok, f"max |delta| {worst:.4f} (< 0.02); refinement: {'; '.join(details)}", capsys)


def test_criterion_7_property_suites(capsys):
    rng = np.random.default_rng(2024)
    norm_err = trip_err = 0.0
    for _ in range(1000):
        amps = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        s = algebra.make_state(amps, PathBasis.SLIT_AB, PolBasis.CIRCULAR)
        for t in (algebra.pol_basis_change(s, PolBasis.LINEAR),
                  algebra.path_basis_change(s, PathBasis.PLUS_MINUS), algebra.apply_lens(s)):
            norm_err = max(norm_err, abs(t.total_probability - 1))
        back = algebra.path_basis_change(algebra.path_basis_change(s, PathBasis.PLUS_MINUS), PathBasis.SLIT_AB)
        back = algebra.pol_basis_change(algebra.pol_basis_change(back, PolBasis.LINEAR), PolBasis.CIRCULAR)
        trip_err = max(trip_err, np.abs(back.amplitudes - s.amplitudes).max())
    bound = 0.0
    for _ in range(1000):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        w = rng.uniform(0.05, 0.95)
        amps = np.array([math.sqrt(w) * m[0], math.sqrt(1 - w) * m[1]])
        bound = max(bound, algebra.duality_report(algebra.PathPolState(amps, PathBasis.SLIT_AB,
                                                                       PolBasis.LINEAR)).bound)
    x = make_grid(2e-3, 4096)
    env = np.exp(-(x / 2.5e-4) ** 2)

    def rand_field():
        return PolarizedField(x, env * (rng.normal(size=4096) + 1j * rng.normal(size=4096)),
                              env * (rng.normal(size=4096) + 1j * rng.normal(size=4096)), 650e-9)

    f, g = rand_field(), rand_field()
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    lhs = propagate(f.evolve(a * f.e_h + b * g.e_h, a * f.e_v + b * g.e_v), 0.05)
    pf, pg = propagate(f, 0.05), propagate(g, 0.05)
    lin = max(np.abs(lhs.e_h - (a * pf.e_h + b * pg.e_h)).max(),
              np.abs(lhs.e_v - (a * pf.e_v + b * pg.e_v)).max()) / np.abs(lhs.e_h).max()
    cfg = ExperimentConfig(markers=True)
    ap = make_aperture_field(cfg)
    le = propagate(ap, cfg.z_lens)
    lens = apply_thin_lens(le, cfg.focal_length)
    im = propagate(lens, cfg.z_image)
    drift = max(abs(le.power + le.escaped - ap.power),
                abs(lens.power - le.power) / le.power,
                abs(im.power + im.escaped - lens.power - lens.escaped)) / ap.power
    ok = norm_err <= 1e-12 and trip_err <= 1e-12 and bound <= 1 + 1e-9 and lin <= 1e-10 and drift <= 1e-9
    report(7, "property suites", ok,
           f"norm {norm_err:.1e}, round trip {trip_err:.1e} (<= 1e-12); max D^2+V^2 {bound:.12f} (<= 1+1e-9); "
           f"linearity {lin:.1e} (<= 1e-10); power drift {drift:.1e} (<= 1e-9)", capsys)


def test_criterion_8_monte_carlo(catalog, capsys):
    n = 1_000_000
    pvals = {}
    zero_hits = None
    for name in ("exact-marked-circular", "exact-eraser-linear", "fair-binary-exact", "marked-circular"):
        summary = run_scenario(catalog[name]).summary
        sample = sample_photons(summary, n, seed=20240601)
        pvals[name] = sample.chi_square()[1]
        if name == "exact-marked-circular":
            zero_hits = sample.count("D_A", "R")
    elapsed = time.perf_counter() - _clock["start"]
    ok = min(pvals.values()) > 0.001 and zero_hits == 0 and elapsed < SUITE_BUDGET_S
    report(8, "Monte Carlo", ok,
           f"n={n}, min chi-square p {min(pvals.values()):.3f} (> 0.001), (D_A,R) count {zero_hits} (== 0), "
           f"acceptance suite {elapsed:.1f} s (< 60 s)", capsys)
