"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line through the ``report`` fixture; the
lines are repeated in the terminal summary under "acceptance criteria".
"""

import statistics
import time

import numpy as np
import pytest
from scipy import sparse

from reference import dense_distance, grid_reference, naive_bag, naive_mcb, top_s_reference
from rboss.boss import (
    _distance_matrix,
    boss_distance,
    build_base_boss,
    fast_loocv_estimate,
    loocv_estimate,
)
from rboss.checkpoint import load_checkpoint, resume_build, save_checkpoint
from rboss.data import Fraction, LabeledDataset, MaxTotal, stratified_resample, subsample
from rboss.ensemble import (
    Combiner,
    EnsembleMember,
    EnsembleModel,
    FullLoocv,
    MemberPool,
    RbossConfig,
    build_grid_boss,
    cawpe_weight,
    enumerate_parameter_space,
    predict_ensemble,
)
from rboss.experiment import build_variant
from rboss.randomised import RbossBuilder, build_rboss
from rboss.sfa import SfaParameters, bag_of_words, fit_mcb
from rboss.synthetic import SyntheticSpec, generate_synthetic

pytestmark = pytest.mark.slow


def test_sfa_oracle(report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        m = int(rng.integers(8, 65))
        n = int(rng.integers(1, 11))
        p = bool(rng.integers(2))
        l = int(rng.choice([l for l in (4, 6, 8, 10, 12, 14, 16) if l <= m - 2 * p]))
        w = int(rng.integers(l + 2 * p, m + 1))
        alpha = int(rng.integers(2, 7))
        X = rng.normal(size=(n, m))
        params = SfaParameters(l, alpha, w, p)
        bp = fit_mcb(X, params)
        ref_bp = naive_mcb(X.tolist(), l, alpha, w, p)
        for row in X:
            if bag_of_words(row, params, bp) != naive_bag(row.tolist(), l, w, p, ref_bp):
                mismatches += 1
    elapsed = time.perf_counter() - start
    report(
        1,
        "SFA bags match the naive per-window DFT reference",
        mismatches == 0 and elapsed < 10,
        f"{mismatches} mismatching series over 200 cases, {elapsed:.1f}s",
    )


def test_boss_distance(report):
    rng = np.random.default_rng(7)
    universe = 40
    pairs = []
    for _ in range(1000):
        bags = []
        for _ in range(2):
            size = int(rng.integers(0, 15))
            words = rng.choice(universe, size=size, replace=False)
            bags.append({int(u): int(c) for u, c in zip(words, rng.integers(1, 10, size))})
        pairs.append(bags)

    dict_bad = sum(boss_distance(a, b) != dense_distance(a, b) for a, b in pairs)

    def to_csr(bags):
        rows, cols, vals = [], [], []
        for i, bag in enumerate(bags):
            for u, c in bag.items():
                rows.append(i)
                cols.append(u)
                vals.append(float(c))
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(bags), universe))

    Q = to_csr([a for a, _ in pairs])
    T = to_csr([b for _, b in pairs])
    matrix = np.diag(_distance_matrix(Q, T, T.multiply(T).tocsr()))
    matrix_bad = sum(matrix[i] != dense_distance(a, b) for i, (a, b) in enumerate(pairs))

    a, b = {"ab": 2, "ba": 1}, {"ab": 1, "cc": 5}
    example = (boss_distance(a, b), boss_distance(b, a))
    report(
        2,
        "BOSS distance matches the dense reference; asymmetry example gives 2 and 26",
        dict_bad == 0 and matrix_bad == 0 and example == (2, 26),
        f"dict mismatches {dict_bad}, matrix mismatches {matrix_bad}, example {example}",
    )


def test_grid_retention(report):
    start = time.perf_counter()
    data = generate_synthetic(SyntheticSpec(n_per_class=10, m=30, counts=(1, 3), pattern_length=6, noise=0.3), seed=2)
    model = build_grid_boss(data)
    want, accs = grid_reference(data.series.tolist(), data.labels.tolist())
    elapsed = time.perf_counter() - start
    got = {(p.word_length, p.window_length, p.normalize) for p in model.member_params}
    best = max(accs.values())
    retained_ok = all(m.train_accuracy >= 0.92 * best for m in model.members)
    accs_ok = all(
        m.train_accuracy == accs[(m.params.word_length, m.params.window_length, m.params.normalize)]
        for m in model.members
    )
    report(
        3,
        "grid retention keeps exactly the members within 92% of the best",
        retained_ok and accs_ok and got == want and elapsed < 120,
        f"{len(got)} of {len(accs)} retained, oracle agrees: {got == want}, {elapsed:.1f}s",
    )


def test_filtered_policy(report):
    rng = np.random.default_rng(99)
    bad = 0
    for _ in range(500):
        length = int(rng.integers(1, 60))
        s = int(rng.integers(1, 20))
        # Coarse accuracy grid so ties are common.
        accs = (rng.integers(0, 12, size=length) / 11).tolist()
        pool = MemberPool(s)
        for i, acc in enumerate(accs):
            pool.offer(EnsembleMember(None, acc, 1.0, None, i, i + 1))
        got = sorted(m.ordinal - 1 for m in pool.members)
        bad += got != top_s_reference(accs, s)
    report(
        4,
        "filtered insert/replace equals top-s with earliest-built tie wins",
        bad == 0,
        f"{bad} of 500 sequences differ",
    )


def test_determinism_and_resume(report, tmp_path):
    start = time.perf_counter()
    spec = SyntheticSpec(n_per_class=15, m=96, pattern_length=16)
    train = generate_synthetic(spec, seed=21)
    test = generate_synthetic(spec, seed=22)
    problems = []
    configs = {
        "plain": RbossConfig(ensemble_size=10, seed=5),
        "filtered-cawpe": RbossConfig(
            ensemble_size=10,
            max_ensemble_size=5,
            use_cawpe=True,
            estimate=FullLoocv(),
            subsample_policy=Fraction(0.7),
            seed=5,
        ),
    }
    for name, cfg in configs.items():
        a, b = build_rboss(train, cfg), build_rboss(train, cfg)
        if a.member_params != b.member_params or not np.array_equal(a.predict(test.series), b.predict(test.series)):
            problems.append(f"{name}: repeated builds differ")
        builder = RbossBuilder(train, cfg)
        for _ in range(3):
            builder.step()
        path = tmp_path / f"{name}.ckpt"
        save_checkpoint(builder.checkpoint(), path)
        resumed = resume_build(train, load_checkpoint(path))
        same = (
            resumed.member_params == a.member_params
            and np.array_equal(resumed.weights, a.weights)
            and np.array_equal(resumed.predict_proba(test.series), a.predict_proba(test.series))
        )
        if not same:
            problems.append(f"{name}: resumed build differs")
    elapsed = time.perf_counter() - start
    report(
        5,
        "same seed gives identical builds; save after 3 members and resume is bit-identical",
        not problems and elapsed < 60,
        "; ".join(problems) or f"{elapsed:.1f}s",
    )


def _timed_contract(train, budget, seed):
    start = time.perf_counter()
    builder = RbossBuilder(train, RbossConfig(time_budget=budget, seed=seed))
    longest = 0.0
    while builder.should_continue():
        t0 = time.perf_counter()
        builder.step()
        longest = max(longest, time.perf_counter() - t0)
    model = builder.finalize()
    return model, time.perf_counter() - start, longest


def test_contract(report):
    spec = SyntheticSpec(n_per_class=50, m=256, pattern_length=16)
    train = generate_synthetic(spec, seed=31)
    test = generate_synthetic(spec, seed=32)
    budgets = (1.0, 2.0, 5.0, 10.0)
    seeds = range(10)
    counts = {s: [] for s in seeds}
    accs = {b: [] for b in budgets}
    overrun = []
    for seed in seeds:
        for budget in budgets:
            model, wall, longest = _timed_contract(train, budget, seed)
            counts[seed].append(len(model))
            accs[budget].append(float(np.mean(model.predict(test.series) == test.labels)))
            if budget == 5.0 and not (wall <= budget + longest and 1 <= len(model) <= 500):
                overrun.append(f"seed {seed}: {wall:.2f}s, longest member {longest:.2f}s, {len(model)} members")
    monotone = all(all(x <= y for x, y in zip(c, c[1:])) for c in counts.values())
    mean_acc = [statistics.fmean(accs[b]) for b in budgets]
    acc_ok = all(y >= x - 0.03 for x, y in zip(mean_acc, mean_acc[1:]))
    report(
        6,
        "contract honoured, member count monotone in budget, accuracy non-decreasing within 0.03",
        not overrun and monotone and acc_ok,
        f"members seed0 {counts[0]}, mean accuracy {[round(a, 3) for a in mean_acc]}"
        + (f", overruns: {overrun}" if overrun else ""),
    )


def test_speed(report):
    data = generate_synthetic(SyntheticSpec(n_per_class=60, m=300, pattern_length=20), seed=41)
    train = stratified_resample(data, 0.5, seed=0).train
    cfg = RbossConfig(ensemble_size=20, seed=0)
    grid_times, rboss_times = [], []
    for _ in range(3):
        t0 = time.perf_counter()
        build_grid_boss(train)
        grid_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        build_rboss(train, cfg)
        rboss_times.append(time.perf_counter() - t0)
    ratio = statistics.median(grid_times) / statistics.median(rboss_times)
    report(
        7,
        "RBOSS k=20 builds at least 5x faster than grid BOSS",
        ratio >= 5,
        f"grid {statistics.median(grid_times):.2f}s, rboss {statistics.median(rboss_times):.3f}s, ratio {ratio:.1f}x",
    )


def test_classification(report):
    start = time.perf_counter()
    data = generate_synthetic(SyntheticSpec(n_per_class=60, m=128, counts=(1, 4), noise=0.5), seed=51)
    results = {"rboss-filtered-cawpe": [], "grid-boss": []}
    for r in range(5):
        split = stratified_resample(data, 0.5, seed=r, resample_index=r)
        for variant in results:
            model = build_variant(variant, split.train, seed=r)
            results[variant].append(float(np.mean(model.predict(split.test.series) == split.test.labels)))
    means = {v: statistics.fmean(a) for v, a in results.items()}
    elapsed = time.perf_counter() - start
    report(
        8,
        "mean test accuracy of rboss-filtered-cawpe and grid BOSS at least 0.90",
        all(m >= 0.90 for m in means.values()) and elapsed < 300,
        ", ".join(f"{v} {m:.3f}" for v, m in means.items()) + f", {elapsed:.0f}s",
    )


def test_cawpe_example(report):
    rng = np.random.default_rng(61)
    params = SfaParameters(8, 4, 16, True)
    a_series, b_series = rng.normal(size=(2, 40))
    members = []
    for series, label, acc in ((a_series, 0, 0.8), (a_series, 0, 0.8), (b_series, 1, 0.9)):
        model = build_base_boss(LabeledDataset(series[None], [label], 2), params)
        members.append(EnsembleMember(model, acc, cawpe_weight(acc, 4.0)))
    ensemble = EnsembleModel(tuple(members), Combiner.WEIGHTED_PROBABILITY, 2, 40)
    label, probs = predict_ensemble(ensemble, rng.normal(size=40))
    want = 0.8192 / 1.4753
    report(
        9,
        "CAWPE three-member example predicts class A with probability 0.8192/1.4753",
        label == 0 and abs(probs[0] - want) <= 1e-9,
        f"label {label}, P(A) {probs[0]:.12f}, expected {want:.12f}",
    )


def test_fast_estimate(report):
    data = generate_synthetic(SyntheticSpec(n_per_class=200, m=128), seed=71)
    space = enumerate_parameter_space(data.m, 1.0)
    rng = np.random.default_rng(72)
    diffs = []
    for i, pid in enumerate(rng.choice(len(space), size=10, replace=False)):
        model = build_base_boss(data, space[int(pid)])
        full = loocv_estimate(model).accuracy
        fast = fast_loocv_estimate(model, 50, seed=i)
        assert fast.evaluated_count == 100
        diffs.append(abs(fast.accuracy - full))
    close = sum(d <= 0.15 for d in diffs)
    report(
        10,
        "fast estimate within 0.15 of full leave-one-out for at least 9 of 10 parameter sets",
        close >= 9,
        f"{close}/10 within bound, largest gap {max(diffs):.3f}",
    )


def test_subsample_invariance(report):
    problems = []
    d = generate_synthetic(SyntheticSpec(n_per_class=50, m=40, pattern_length=8), seed=81)
    sub, idx = subsample(d, Fraction(1.0), seed=3)
    if not (sub == d and np.array_equal(idx, np.arange(d.n))):
        problems.append("Fraction(1.0) is not the identity")
    for n_per_class in (1, 40, 250):
        labels = np.repeat([0, 1], n_per_class)
        small = LabeledDataset(np.random.default_rng(n_per_class).normal(size=(labels.size, 5)), labels)
        sub, idx = subsample(small, MaxTotal(500), seed=0)
        if not (sub == small and np.array_equal(idx, np.arange(small.n))):
            problems.append(f"MaxTotal(500) changed n={small.n}")
    sub, _ = subsample(d, Fraction(0.7), seed=5)
    counts = np.bincount(sub.labels).tolist()
    if counts != [35, 35]:
        problems.append(f"Fraction(0.7) gave {counts}")
    report(
        11,
        "subsample identities and 35/35 split for Fraction(0.7) of 100",
        not problems,
        "; ".join(problems),
    )
