"""Acceptance checks, one test per criterion; each prints a single PASS/FAIL line.

The lines are repeated in the terminal summary of any pytest run that
includes this file; ``python tests/test_acceptance.py`` runs it alone.
"""

import math
import sys
import time

import numpy as np
import pytest

from smoothodds.calibrator import SearchGrid, calibrate_all
from smoothodds.curvelab import CurveFamily, construct, eval_phi, lipschitz, normalized_coefficients, verify_constraints
from smoothodds.curvelab import closed_forms
from smoothodds.dataset import ScoreRecord, group_distribution
from smoothodds.decider import decide, decide_arrays, uniforms
from smoothodds.fairmetrics import individual_odds_satisfied, odds_distance, odds_image
from smoothodds.rates import rate_pair
from smoothodds.roc import tail_masses

from conftest import ACCEPTANCE_LINES, random_dist


def report(n, ok, text):
    line = f"[acceptance {n}] {'PASS' if ok else 'FAIL'}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# Published (t0, t1, p) and the L_R value printed for them.
CREDIT_CELLS = {
    ("white", "linear"): (9.5, 52.0, 0.348, 0.044),
    ("white", "quadratic"): (11.0, 78.5, 0.610, 0.046),
    ("white", "cubic"): (1.5, 49.5, 0.256, 0.091),
    ("white", "quartic"): (7.5, 63.5, 0.468, 0.027),
    ("black", "linear"): (20.5, 42.5, 0.830, 0.222),
    ("black", "quadratic"): (20.0, 82.0, 0.928, 0.416),
    ("black", "cubic"): (20.5, 44.5, 0.844, 0.338),
    ("black", "quartic"): (14.0, 32.0, 0.426, 0.092),
    ("asian", "linear"): (33.5, 61.5, 0.806, 0.148),
    ("asian", "quadratic"): (24.0, 49.5, 0.406, 0.115),
    ("asian", "cubic"): (34.0, 70.0, 0.864, 0.265),
    ("asian", "quartic"): (28.0, 52.5, 0.546, 0.064),
}
COMPAS_CELLS = {
    ("caucasian male", "linear"): (20.0, 43.0, 0.194, 0.181),
    ("caucasian male", "cubic"): (34.0, 54.0, 0.772, 0.254),
    ("caucasian male", "quartic"): (25.0, 48.0, 0.412, 0.075),
    ("caucasian female", "linear"): (27.0, 42.0, 0.478, 0.073),
    ("caucasian female", "quadratic"): (26.0, 47.0, 0.576, 0.129),
    ("caucasian female", "cubic"): (33.0, 91.0, 0.952, 0.513),
    ("caucasian female", "quartic"): (26.0, 46.0, 0.557, 0.080),
    ("african-american female", "linear"): (23.0, 42.0, 0.326, 0.109),
    ("african-american female", "quadratic"): (12.0, 43.0, 0.232, 0.214),
    ("african-american female", "cubic"): (33.0, 77.0, 0.926, 0.427),
    ("african-american female", "quartic"): (26.0, 48.0, 0.550, 0.072),
}
# Printed as 0.254, the same value as the cubic cell beside it; the parameters give 0.197.
COMPAS_DEFECT = ("caucasian male", "quadratic", (18.0, 46.0, 0.266, 0.254))


def test_1_lipschitz_reproduction():
    start = time.perf_counter()
    cells = {**CREDIT_CELLS, **COMPAS_CELLS}
    misses = []
    for (group, family), (t0, t1, p, printed) in cells.items():
        got = lipschitz(construct(family, t0, t1, p))
        if abs(got - printed) > 0.002:
            misses.append(f"{group}/{family} {got:.4f} vs {printed}")
    elapsed = time.perf_counter() - start
    ok = not misses and elapsed < 1.0
    report(
        1,
        ok,
        f"{len(cells) - len(misses)}/{len(cells)} published L_R cells within 0.002 in {elapsed * 1e3:.0f} ms "
        f"(+1 known table defect, see test_1_compas_quadratic_cell){'; misses: ' + ', '.join(misses) if misses else ''}",
    )
    assert ok


@pytest.mark.xfail(strict=True, reason="printed value duplicates the neighbouring cubic cell")
def test_1_compas_quadratic_cell():
    group, family, (t0, t1, p, printed) = COMPAS_DEFECT
    got = lipschitz(construct(family, t0, t1, p))
    report("1 (defect cell)", False, f"{group}/{family}: computed {got:.4f}, printed {printed} (expected failure)")
    assert abs(got - printed) <= 0.002


def test_2_verification_sweep():
    start = time.perf_counter()
    rng = np.random.default_rng(20240501)
    pairs = []
    while len(pairs) < 20:
        t0, t1 = np.sort(rng.uniform(0, 100, size=2))
        if t1 - t0 > 1e-3:
            pairs.append((float(t0), float(t1)))
    ps = [round(0.05 * k, 2) for k in range(1, 20)]
    checked, failures = 0, []
    for family in (CurveFamily.LINEAR, CurveFamily.QUADRATIC, CurveFamily.CUBIC, CurveFamily.QUARTIC):
        for p in ps:
            if family is CurveFamily.QUARTIC and not 0.4 <= p <= 0.6:
                continue
            for t0, t1 in pairs:
                rep = verify_constraints(construct(family, t0, t1, p), tol=1e-9)
                checked += 1
                if not rep.passed:
                    failures.append(f"{family.value} p={p} ({t0:.3f}, {t1:.3f}): {[c.name for c in rep.failures]}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10.0
    report(2, ok, f"{checked - len(failures)}/{checked} curves pass every constraint at 1e-9 in {elapsed:.2f} s")
    assert ok, failures[:5]


def test_3_solver_vs_printed_coefficients():
    worst = 0.0
    for p in np.linspace(0.4, 0.6, 81):
        seg0, seg1 = normalized_coefficients("quartic", float(p))
        ref = closed_forms.quartic(float(p))
        worst = max(worst, max(abs(a - b) for a, b in zip(seg0, ref)), max(abs(a - b) for a, b in zip(seg1, ref)))
    _, printed_upper = closed_forms.cubic(0.3)
    at_one = sum(printed_upper)
    typo = abs(at_one - 1.0)
    ok = worst <= 1e-9 and typo > 0.1
    report(3, ok, f"quartic max coefficient error {worst:.2e}; printed cubic upper segment gives psi(1) = {at_one:.4f} at p=0.3")
    assert ok


def test_4_fixed_rule_identity(credit, small_credit):
    rng = np.random.default_rng(4)
    worst, checked = 0.0, 0
    dists = [group_distribution(ds, g) for ds in (credit, small_credit) for g in ds.groups]
    dists += [random_dist(rng, n=int(rng.integers(2, 40))) for _ in range(30)]
    for dist in dists:
        t0_, t1_ = tail_masses(dist)
        support = dist.support
        for _ in range(40):
            i, j = np.sort(rng.integers(0, support.size, size=2))
            p = float(rng.uniform(0.001, 0.999))
            cp = construct("fixed", support[i], support[j], p)
            fpr, tpr = rate_pair(dist, cp)
            if cp.is_single_threshold:
                continue
            # rates of the single thresholds at t0 and t1
            f0, r0 = t0_[i], t1_[i]
            f1, r1 = t0_[j], t1_[j]
            worst = max(worst, abs(fpr - (p * f0 + (1 - p) * f1)), abs(tpr - (p * r0 + (1 - p) * r1)))
            checked += 1
    ok = worst <= 1e-12
    report(4, ok, f"fixed-rule rates equal p*rates(t0) + (1-p)*rates(t1) on {checked} rules, max error {worst:.1e}")
    assert ok


@pytest.fixture(scope="module")
def calibrations(credit):
    grid = SearchGrid()
    out, times = {}, {}
    for family in CurveFamily:
        start = time.perf_counter()
        out[family] = calibrate_all(credit, family, grid)
        times[family] = time.perf_counter() - start
    return out, times


def test_5_end_to_end_equalized_odds(credit, calibrations):
    results, times = calibrations
    assert credit.total_weight() == 100_000 and len(credit.groups) == 4
    fixed = results[CurveFamily.FIXED]
    ok = sum(times.values()) < 60.0
    parts = []
    for family in (CurveFamily.LINEAR, CurveFamily.QUADRATIC, CurveFamily.CUBIC, CurveFamily.QUARTIC):
        res = results[family]
        acc_diff = max(abs(res.metrics[g].expected_accuracy - fixed.metrics[g].expected_accuracy) for g in res.rules)
        ok &= res.max_eo_gap <= 1e-3 and acc_diff <= 0.005 and res.target == fixed.target
        parts.append(f"{family.value} EO {res.max_eo_gap:.1e} dAcc {100 * acc_diff:.3f}pp")
    report(5, ok, f"{'; '.join(parts)}; all five families calibrated in {sum(times.values()):.1f} s")
    assert ok


def test_6_individual_odds_and_distance(credit, calibrations):
    results, _ = calibrations
    rng = (0.0, 100.0)
    # fixed rules with distinct p never share an odds value between their plateaus
    fixed_rules = {"a": construct("fixed", 20, 50, 0.3), "b": construct("fixed", 30, 60, 0.7), "c": construct("fixed", 10, 40, 0.45)}
    fixed_report = individual_odds_satisfied({g: odds_image(cp, rng) for g, cp in fixed_rules.items()})
    ok = not fixed_report.satisfied and len(fixed_report.violations()) == 6
    calibrated_fixed = results[CurveFamily.FIXED]
    ps = {cp.p for g, cp in calibrated_fixed.rules.items() if g != calibrated_fixed.baseline and not cp.is_single_threshold}
    if len(ps) > 1:
        ok &= not calibrated_fixed.odds_report.satisfied

    pairs_checked = 0
    for family in (CurveFamily.LINEAR, CurveFamily.QUADRATIC, CurveFamily.CUBIC, CurveFamily.QUARTIC):
        res = results[family]
        interior = [
            g
            for g, cp in res.rules.items()
            if g != res.baseline and not cp.is_single_threshold and rng[0] < cp.t0 and cp.t1 < rng[1]
        ]
        for a in interior:
            for b in interior:
                if a != b:
                    ok &= res.odds_report.pairs[(a, b)]
                    pairs_checked += 1

    gen = np.random.default_rng(6)
    worst_ratio, n_pairs = 0.0, 100_000
    for family in (CurveFamily.LINEAR, CurveFamily.QUADRATIC, CurveFamily.CUBIC, CurveFamily.QUARTIC):
        rules = [cp for cp in results[family].rules.values() if not cp.is_single_threshold]
        rules.append(construct(family, 20.0, 45.0, 0.5))
        for cp in rules:
            L = lipschitz(cp)
            r1 = gen.uniform(-10, 110, n_pairs)
            r2 = np.where(gen.random(n_pairs) < 0.5, gen.uniform(-10, 110, n_pairs), r1 + gen.normal(0, 0.5, n_pairs))
            d = np.abs(eval_phi(cp, r1) - eval_phi(cp, r2))
            bound = L * np.abs(r1 - r2)
            ok &= bool(np.all(d <= bound * (1 + 1e-9) + 1e-12))
            for k in range(0, n_pairs, 5000):
                assert odds_distance(cp, r1[k], r2[k]) == d[k]
            nz = bound > 0
            worst_ratio = max(worst_ratio, float(np.max(d[nz] / bound[nz])))
    report(
        6,
        ok,
        f"fixed rules with distinct p violate individual odds; {pairs_checked} interior continuous pairs satisfy it; "
        f"max |dphi|/(L|dr|) = {worst_ratio:.6f} over 1e5 pairs per rule",
    )
    assert ok


def test_7_decision_stream(credit, calibrations):
    results, _ = calibrations
    seed = 31337
    n = 1_000_000
    cp = construct("fixed", 0.0, 10.0, 0.5)
    phi = eval_phi(cp, 5.0)
    outcomes = uniforms(seed, 0, n) < phi
    frac = float(outcomes.mean())
    # the vectorised stream is the one decide() uses
    rec = ScoreRecord(5.0, "g", 1)
    same = all(decide({"g": cp}, rec, seed, i).outcome == int(outcomes[i]) for i in range(0, n, 997))
    ok = phi == 0.5 and abs(frac - 0.5) <= 0.0016 and same

    res = results[CurveFamily.LINEAR]
    a = decide_arrays(res, credit, seed=seed)
    labels = credit.arrays["label"][a["record"]]
    groups = credit.arrays["group"][a["record"]]
    worst_z = 0.0
    for gi, g in enumerate(credit.groups):
        expected = rate_pair(group_distribution(credit, g), res.rules[g])
        for y in (0, 1):
            sel = (groups == gi) & (labels == y)
            m = sel.sum()
            emp = a["outcome"][sel].mean()
            sigma = math.sqrt(float(np.sum(a["probability"][sel] * (1 - a["probability"][sel])))) / m
            z = abs(emp - expected[y]) / sigma if sigma > 0 else (0.0 if emp == expected[y] else math.inf)
            worst_z = max(worst_z, z)
    ok &= worst_z <= 3.0 and a["record"].size == 100_000
    report(7, ok, f"positive fraction {frac:.5f} over 1e6 draws at phi=0.5; batch (FPR, TPR) worst deviation {worst_z:.2f} sigma on 1e5 draws")
    assert ok


def test_8_divergence():
    small = lipschitz(construct("linear", 30.0, 60.0, 1e-4))
    half = lipschitz(construct("linear", 30.0, 60.0, 0.5))
    ratio = small / half
    ok = ratio >= 1e3
    report(8, ok, f"linear L at p=1e-4 is {ratio:.0f} times L at p=0.5")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
