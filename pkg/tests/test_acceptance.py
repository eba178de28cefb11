"""Acceptance gate: twelve numbered end-to-end criteria.

Each test certifies one criterion at its stated tolerance and prints a
single summary line (visible with `pytest -s` or on failure) of the form

    C<nn> <label>: PASS|FAIL <measured extremes>

The criteria pin the whole surface: the per-step projection identity and
monotone descent, the even/odd comparison laws, the telescoped bound, the
Pinsker and Cauchy inequalities, convergence at scale, reconstruction
uniqueness, the finite-horizon lower-semicontinuity proxy, reversibility of
the induced kernels, sampler agreement, and the hypothesis-violation exits.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from daflow.cli import EXIT_HYPOTHESIS, main
from daflow.diagnostics import (
    cauchy_check,
    detailed_balance_residual,
    lemma2_check,
    lemma3_check,
    lsc_gap,
    reconstruct_from_conditionals,
)
from daflow.dist import (
    Axis,
    JointDensity,
    MarginalDensity,
    independence_target,
    load_joint,
    make_target,
    random_positive_target,
)
from daflow.engine import (
    RetainPolicy,
    StopReason,
    da_half_step,
    initial_state,
    run,
    trace_to_csv,
)
from daflow.metrics import pinsker_gap, total_variation
from daflow.sampler import consistency_report, run_chains


def report(line: str, passed: bool) -> None:
    print(f"{line.split(':')[0]}: {'PASS' if passed else 'FAIL'} {line.split(': ', 1)[1]}")
    assert passed, line


def _uniform(nx: int, ny: int) -> JointDensity:
    return JointDensity(np.full((nx, ny), 1.0 / (nx * ny)))


# --- shared trace batteries ---------------------------------------------------


@pytest.fixture(scope="module")
def descent_battery():
    """100 random strictly positive targets, 2x2 through 20x30, 50 half-steps
    each, records only (no states needed for criteria 1, 2, 5)."""
    rng = np.random.default_rng(20260816)
    sizes = [(2, 2), (20, 30)]
    while len(sizes) < 100:
        sizes.append((int(rng.integers(2, 21)), int(rng.integers(2, 31))))
    t0 = time.perf_counter()
    traces = []
    for i, (nx, ny) in enumerate(sizes):
        target = random_positive_target(nx, ny, seed=1000 + i)
        p0 = random_positive_target(nx, ny, seed=5000 + i).joint
        traces.append(
            run(p0, target, max_half_steps=50, eps=1e-300, retain=RetainPolicy.none())
        )
    elapsed = time.perf_counter() - t0
    return traces, elapsed


@pytest.fixture(scope="module")
def lemma_battery():
    """20 random targets iterated 12 half-steps with all states retained,
    covering the (t, n) grid of criteria 3, 4, 6."""
    traces = []
    for i in range(20):
        nx, ny = 4 + i % 5, 4 + (i * 3) % 6
        target = random_positive_target(nx, ny, seed=300 + i)
        p0 = random_positive_target(nx, ny, seed=700 + i).joint
        trace = run(p0, target, max_half_steps=12, eps=1e-300, retain=RetainPolicy.all())
        assert trace.last_t == 12, "battery trace ended early; criteria below would be vacuous"
        traces.append(trace)
    return traces


class TestAcceptance:
    def test_c01_projection_identity_residuals(self, descent_battery):
        traces, elapsed = descent_battery
        worst = 0.0
        checked = 0
        for trace in traces:
            for r in trace.records[:-1]:
                worst = max(worst, r.lemma1_residual)
                checked += 1
        passed = worst <= 1e-10 and elapsed <= 10.0
        report(
            f"C01 projection-identity: worst residual {worst:.3e} over {checked} steps "
            f"of 100 targets, elapsed {elapsed:.2f}s (limit 10s)",
            passed,
        )

    def test_c02_monotone_descent(self, descent_battery):
        traces, _ = descent_battery
        worst_rise = 0.0
        for trace in traces:
            ds = [r.d_to_target.value for r in trace.records]
            for a, b in zip(ds, ds[1:]):
                worst_rise = max(worst_rise, b - a)
        passed = worst_rise <= 1e-12
        report(f"C02 monotone-descent: worst rise {worst_rise:.3e} (limit 1e-12)", passed)

    def test_c03_step_comparison_laws(self, lemma_battery):
        worst_even_slack = math.inf
        worst_odd_residual = 0.0
        for trace in lemma_battery:
            for t in (1, 2, 3):
                for n in range(1, 9):
                    rep = lemma2_check(trace, t, n)
                    if n % 2 == 0:
                        worst_even_slack = min(worst_even_slack, rep.residual_or_slack)
                    else:
                        worst_odd_residual = max(worst_odd_residual, rep.residual_or_slack)
        passed = worst_even_slack >= -1e-10 and worst_odd_residual <= 1e-10
        report(
            f"C03 step-comparison: even slack >= {worst_even_slack:.3e}, "
            f"odd residual <= {worst_odd_residual:.3e} (limits -1e-10, 1e-10)",
            passed,
        )

    def test_c04_telescoped_bound(self, lemma_battery):
        worst_slack = math.inf
        worst_small_n = 0.0
        for trace in lemma_battery:
            for t in (1, 2, 3):
                for n in range(0, 9):
                    rep = lemma3_check(trace, t, n)
                    worst_slack = min(worst_slack, rep.residual_or_slack)
                    if n in (0, 1):
                        worst_small_n = max(worst_small_n, abs(rep.residual_or_slack))
        passed = worst_slack >= -1e-10 and worst_small_n <= 1e-10
        report(
            f"C04 telescoped-bound: slack >= {worst_slack:.3e}, "
            f"|slack| at n<=1 <= {worst_small_n:.3e} (limits -1e-10, 1e-10)",
            passed,
        )

    def test_c05_pinsker(self, descent_battery):
        traces, _ = descent_battery
        worst = math.inf
        for trace in traces:
            for r in trace.records:
                gap = r.d_to_target.value - 0.5 * r.tv_to_target**2
                worst = min(worst, gap)
        rng = np.random.default_rng(77)
        for _ in range(10_000):
            nx, ny = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            a = rng.gamma(1.0, size=(nx, ny)) * (rng.random((nx, ny)) > 0.1)
            b = rng.gamma(1.0, size=(nx, ny)) * (rng.random((nx, ny)) > 0.1)
            if a.sum() <= 0 or b.sum() <= 0:
                continue
            g = pinsker_gap(JointDensity(a / a.sum()), JointDensity(b / b.sum()))
            assert not math.isnan(g.value)
            if g.is_finite:
                worst = min(worst, g.value)
        passed = worst >= -1e-12
        report(
            f"C05 pinsker: worst gap {worst:.3e} over all recorded steps "
            f"plus 10000 random pairs (limit -1e-12)",
            passed,
        )

    def test_c06_cauchy_bound(self, lemma_battery):
        worst = math.inf
        for trace in lemma_battery:
            rep = cauchy_check(trace)
            worst = min(worst, rep.residual_or_slack)
        passed = worst >= -1e-10
        report(
            f"C06 cauchy-bound: worst slack {worst:.3e} over all retained pairs "
            f"of 20 traces (limit -1e-10)",
            passed,
        )

    def test_c07_convergence_at_scale(self):
        t0 = time.perf_counter()
        sizes = [(2, 2), (3, 7), (5, 5), (8, 12), (13, 4), (20, 20), (20, 30), (35, 35), (50, 50)]
        slowest = 0
        for i, (nx, ny) in enumerate(sizes):
            target = random_positive_target(nx, ny, seed=80 + i)
            trace = run(_uniform(nx, ny), target, max_half_steps=10_000, eps=1e-8)
            assert trace.stop_reason is StopReason.CONVERGED
            slowest = max(slowest, trace.last_t)
        worst_tv = 0.0
        rng = np.random.default_rng(4)
        for i in range(5):
            nx, ny = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            px = MarginalDensity(Axis.X, random_positive_target(nx, 1, seed=60 + i).joint.w[:, 0])
            py = MarginalDensity(Axis.Y, random_positive_target(1, ny, seed=65 + i).joint.w[0, :])
            target = independence_target(px, py)
            s = initial_state(random_positive_target(nx, ny, seed=70 + i).joint)
            s = da_half_step(da_half_step(s, target), target)
            worst_tv = max(worst_tv, total_variation(s.density, target.joint))
        elapsed = time.perf_counter() - t0
        passed = worst_tv <= 1e-12 and elapsed <= 30.0
        report(
            f"C07 convergence: random targets up to 50x50 converged to 1e-8 "
            f"(slowest {slowest} half-steps); independence targets within TV "
            f"{worst_tv:.3e} after 2 half-steps; elapsed {elapsed:.2f}s (limit 30s)",
            passed,
        )

    def test_c08_reconstruction_uniqueness(self):
        worst_tv = 0.0
        worst_spread = 0.0
        for i in range(10):
            nx, ny = 2 + i % 4, 2 + (i * 2) % 5
            target = random_positive_target(nx, ny, seed=110 + i)
            rebuilt, spread = reconstruct_from_conditionals(
                target.cond_x_given_y, target.cond_y_given_x
            )
            worst_tv = max(worst_tv, total_variation(rebuilt, target.joint))
            worst_spread = max(worst_spread, spread)
        a = random_positive_target(3, 3, seed=11)
        b = random_positive_target(3, 3, seed=12)
        _, incompatible = reconstruct_from_conditionals(a.cond_x_given_y, b.cond_y_given_x)
        passed = worst_tv <= 1e-10 and worst_spread <= 1e-10 and incompatible > 0.01
        report(
            f"C08 reconstruction: TV to joint <= {worst_tv:.3e}, reference spread "
            f"<= {worst_spread:.3e} (limits 1e-10); incompatible pair residual "
            f"{incompatible:.3f} > 0.01",
            passed,
        )

    def test_c09_lower_semicontinuity_proxy(self):
        worst_gap = 0.0
        worst_tol = math.inf
        for i in range(10):
            nx, ny = 3 + i % 4, 3 + (i * 2) % 4
            target = random_positive_target(nx, ny, seed=130 + i)
            p0 = random_positive_target(nx, ny, seed=140 + i).joint
            trace = run(p0, target, max_half_steps=10_000, eps=1e-16)
            assert trace.converged
            rep = lsc_gap(trace, 1, trace.last_t - 1)
            assert rep.passed
            worst_gap = max(worst_gap, abs(rep.residual_or_slack))
            worst_tol = min(worst_tol, rep.tolerance)
        passed = worst_gap <= worst_tol
        report(
            f"C09 lsc-proxy: worst |gap| {worst_gap:.3e} within adaptive tolerance "
            f">= {worst_tol:.3e} on 10 converged traces",
            passed,
        )

    def test_c10_reversibility(self):
        worst = 0.0
        for i in range(50):
            nx, ny = 2 + i % 7, 2 + (i * 3) % 8
            target = random_positive_target(nx, ny, seed=200 + i)
            worst = max(
                worst,
                detailed_balance_residual(target, Axis.X),
                detailed_balance_residual(target, Axis.Y),
            )
        passed = worst <= 1e-12
        report(
            f"C10 reversibility: worst detailed-balance residual {worst:.3e} "
            f"over 50 targets, both axes (limit 1e-12)",
            passed,
        )

    def test_c11_sampler_consistency(self):
        t0 = time.perf_counter()
        replicas = 100_000
        worst_ratio = 0.0
        for nx, ny, seed in ((2, 2, 95), (4, 5, 96)):
            target = random_positive_target(nx, ny, seed=seed)
            p0 = _uniform(nx, ny)
            trace = run(p0, target, max_half_steps=20, eps=1e-300)
            draws = run_chains(target, p0, replicas=replicas, half_steps=20, seed=31)
            rep = consistency_report(
                draws, trace, times=[0, 2, 20], clamp_to_converged_tail=True
            )
            assert rep["all_within_bound"]
            for entry in rep["times"]:
                worst_ratio = max(worst_ratio, entry["tv"] / entry["bound"])
        elapsed = time.perf_counter() - t0
        passed = worst_ratio <= 1.0 and elapsed <= 60.0
        report(
            f"C11 sampler-consistency: worst TV at {worst_ratio:.2f}x the "
            f"5-sigma bound at t in {{0,2,20}}, replicas 1e5, elapsed "
            f"{elapsed:.2f}s (limit 60s)",
            passed,
        )

    def test_c12_hypothesis_violation_paths(self, tmp_path, capsys):
        zero_target = tmp_path / "zero.json"
        zero_target.write_text(
            json.dumps({"nx": 2, "ny": 2, "w": [[1.0, 1.0], [0.0, 0.0]]})
        )
        inside_p0 = tmp_path / "inside.json"
        inside_p0.write_text(
            json.dumps({"nx": 2, "ny": 2, "w": [[0.6, 0.4], [0.0, 0.0]]})
        )
        # route 1: finite divergence but non-positive target -> exit 3
        code_positive = main(
            ["run", "--target", str(zero_target), "--p0", f"file:{inside_p0}"]
        )
        # route 2: infinite starting divergence -> exit 3, reported as inf
        code_infinite = main(["run", "--target", str(zero_target), "--p0", "uniform"])
        out = capsys.readouterr().out
        # library level: the infinity is explicit, never NaN, and exports
        zt = make_target(load_joint(str(zero_target)), require_positive=False)
        trace = run(_uniform(2, 2), zt, max_half_steps=5, eps=1e-10)
        d0 = trace.records[0].d_to_target
        csv_row = trace_to_csv(trace).strip().split("\n")[1]
        passed = (
            code_positive == EXIT_HYPOTHESIS
            and code_infinite == EXIT_HYPOTHESIS
            and "final_d=inf" in out
            and "nan" not in out.lower()
            and trace.stop_reason is StopReason.INFINITE_INITIAL_DIVERGENCE
            and not d0.is_finite
            and not math.isnan(d0.value)
            and ",inf," in csv_row
        )
        report(
            f"C12 hypothesis-violations: exits ({code_positive}, {code_infinite}) "
            f"both 3; divergence exported as 'inf', never NaN",
            passed,
        )
