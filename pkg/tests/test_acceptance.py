"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line.
"""
import csv

import numpy as np
import pytest

from powerspd import (
    SimDesign,
    dist_log_euclidean,
    dist_power,
    dist_procrustes_power,
    estimate_alpha_map,
    fit_alpha,
    frechet_mean,
    log_jacobian,
    log_jacobian_ratio,
    normalize_subjects,
    run_coverage,
    sample_tensors,
    simulate_field,
)
from powerspd.cli import main
from powerspd.likelihood import TAU_ALPHA, TAU_GAP, _ratio_alpha_series, _ratio_direct, _ratio_gap_series

from conftest import random_spd
from oracles import brute_force_frechet_mean, brute_force_procrustes_2x2, lapack_power, numerical_log_jacobian


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def test_criterion_1_table_coverage(report, tmp_path):
    targets = {(2, 4): (0.725, 0.04), (4, 5): (0.950, 0.025), (10, 10): (0.957, 0.025)}
    results = {}
    for (n_v, n_s), (expected, tol) in targets.items():
        out = tmp_path / f"{n_v}_{n_s}.csv"
        code = main(["simulate", "--n-v", str(n_v), "--n-s", str(n_s), "--reps", "500", "--seed", "1",
                     "--threads", "4", "--output", str(out)])
        assert code == 0
        row = next(csv.DictReader(out.read_text().splitlines()))
        results[(n_v, n_s)] = (float(row["coverage"]), expected, tol, int(row["failures"]))
    ok = all(abs(c - e) <= t for c, e, t, _ in results.values())
    detail = "; ".join(f"({k[0]},{k[1]}) {c:.1%} vs {e:.1%} +/-{t:.1%} failures={f}"
                       for k, (c, e, t, f) in results.items())
    assert report(1, ok, detail)


def test_criterion_2_log_euclidean_limit(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        S1, S2 = random_spd(rng, 3, 0.5, 2.0), random_spd(rng, 3, 0.5, 2.0)
        ref = dist_log_euclidean(S1, S2)
        worst = max(worst, abs(dist_power(S1, S2, 1e-4) - ref) / ref)
    assert report(2, worst <= 1e-3, f"max relative gap {worst:.2e} (limit 1e-3)")


def test_criterion_3_jacobian(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    for alpha in (0.3, 0.5, 1.5):
        def transform(S):
            return (lapack_power(S, alpha) - np.eye(3)) / alpha

        for _ in range(50):
            S = random_spd(rng, 3, 0.2, 5.0)
            expected = numerical_log_jacobian(S, transform)
            got = log_jacobian(np.linalg.eigvalsh(S), alpha)
            worst = max(worst, abs(got - expected) / max(1.0, abs(expected)))
    at_one = [log_jacobian(np.linalg.eigvalsh(random_spd(rng, 3)), 1.0) for _ in range(50)]
    exact = all(v == 0.0 for v in at_one)
    assert report(3, worst <= 1e-4 and exact,
                  f"max relative error {worst:.2e} (limit 1e-4); alpha=1 exactly zero: {exact}")


def test_criterion_4_taylor_branches(report):
    mus = np.concatenate([np.geomspace(1e-6, 1e-2, 500), -np.geomspace(1e-6, 1e-2, 500)])
    gap_worst = 0.0
    for alpha in np.linspace(-0.5, 1.0, 76):
        if alpha == 0:
            continue
        band = np.abs(mus) < 3 * TAU_GAP
        diff = np.log(_ratio_gap_series(mus[band], alpha)) - np.log(_ratio_direct(mus[band], alpha))
        gap_worst = max(gap_worst, np.max(np.abs(diff)))
    alpha_worst = 0.0
    wide = np.concatenate([mus, [-0.9, -0.5, 0.5, 2.0, 10.0]])
    for alpha in np.concatenate([np.geomspace(1e-7, 3 * TAU_ALPHA, 60), -np.geomspace(1e-7, 3 * TAU_ALPHA, 60)]):
        diff = np.log(_ratio_alpha_series(wide, alpha)) - np.log(_ratio_direct(wide, alpha))
        alpha_worst = max(alpha_worst, np.max(np.abs(diff)))
    # public function across both switchover points
    jump = max(
        abs(log_jacobian_ratio(1.0, 1.0 + TAU_GAP * (1 - 1e-9), a) - log_jacobian_ratio(1.0, 1.0 + TAU_GAP * (1 + 1e-9), a))
        for a in (-0.5, 0.3, 0.9)
    )
    jump = max(jump, abs(log_jacobian_ratio(3.0, 1.0, TAU_ALPHA * (1 - 1e-9))
                         - log_jacobian_ratio(3.0, 1.0, TAU_ALPHA * (1 + 1e-9))))
    ok = max(gap_worst, alpha_worst, jump) <= 1e-8
    assert report(4, ok, f"gap-series {gap_worst:.1e}, alpha-series {alpha_worst:.1e}, "
                         f"switchover jump {jump:.1e} (limit 1e-8)")


def test_criterion_5_frechet_oracle(report):
    rng = np.random.default_rng(5)
    worst = {}
    for alpha in (-0.5, 0.0, 0.5, 1.0, 2.0):
        errs = []
        for k in range(20):
            X = random_spd(rng, 2 + k % 2, size=int(rng.integers(2, 7)))
            errs.append(np.linalg.norm(frechet_mean(X, alpha).mean - brute_force_frechet_mean(X, alpha)))
        worst[alpha] = max(errs)
    ok = max(worst.values()) <= 1e-5
    assert report(5, ok, "max Frobenius error " + ", ".join(f"a={a}: {e:.1e}" for a, e in worst.items()))


def test_criterion_6_large_sample_coverage(report):
    r = run_coverage(SimDesign(n_v=400, n_s=1, replications=200, seed=6), n_jobs=4)
    ok = r.failures == 0 and r.coverage >= 0.90
    assert report(6, ok, f"coverage {r.coverage:.1%} over {r.successes} replications (need >= 90%)")


def test_criterion_7_scale_invariance(report):
    S, _ = sample_tensors(SimDesign(), 100, np.random.default_rng(7))
    base, scaled = fit_alpha(S), fit_alpha(7.3 * S)
    shift = scaled.loglik - base.loglik
    ok = base.alpha_hat == scaled.alpha_hat
    assert report(7, ok, f"argmax {base.alpha_hat} vs {scaled.alpha_hat} after x7.3; "
                         f"profile shift spread {np.ptp(shift):.1e}")


def test_criterion_8_procrustes(report):
    rng = np.random.default_rng(8)
    violations = 0
    for _ in range(1000):
        S1, S2 = random_spd(rng, 3, size=2)
        if dist_procrustes_power(S1, S2, 0.5)[0] > dist_power(S1, S2, 0.5) + 1e-12:
            violations += 1
    worst = 0.0
    for _ in range(20):
        S1, S2 = random_spd(rng, 2, size=2)
        worst = max(worst, abs(dist_procrustes_power(S1, S2, 0.5)[0] - brute_force_procrustes_2x2(S1, S2, 0.5)))
    ok = violations == 0 and worst <= 1e-6
    assert report(8, ok, f"bound violations {violations}/1000; max gap to brute force {worst:.1e} (limit 1e-6)")


def test_criterion_9_field_pipeline(report):
    field = simulate_field(SimDesign(), n_subjects=9, extent=(20.0, 10.0, 6.0), pitch=0.34,
                           mean_norm=1.0, seed=3)
    raw = estimate_alpha_map(field, n_jobs=4)
    normed = estimate_alpha_map(normalize_subjects(field), n_jobs=4)
    fitted = [e for e in raw if e.fit is not None]
    coverage = np.mean([e.fit.covers(0.3) for e in fitted])
    same = [a.alpha_hat for a in raw] == [b.alpha_hat for b in normed]
    ok = len(fitted) >= 50 and 0.90 <= coverage <= 1.0 and same
    assert report(9, ok, f"{len(fitted)} neighbourhoods, coverage {coverage:.1%} (target 95% +/-5); "
                         f"normalization changes no argmax: {same}")
