"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria 1-10 are fast, deterministic property/oracle checks. Criteria 11-13
evaluate directional quality orderings on the built-in wall-clock
mini-benchmark (several CPU-hours from cold; pre-run it with
``python3 -m hyperhh.minibench --out .minibench`` -- the session fixture
resumes from that journal). Criterion 14 re-runs the matrix in virtual-clock
mode three times to check byte-level determinism.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.
"""

import itertools
import math
import random
from statistics import median

import pytest

from hyperhh.acceptance import (
    AcceptAll,
    ConstTau,
    DiscardWorse,
    ExpTau,
    ImprovementStats,
    Metropolis,
    RecordToRecord,
    Threshold,
    accept,
    effective_tau,
    update_mu,
)
from hyperhh.bench import write_results_csv
from hyperhh.core import BudgetClock, LLHCategory, SearchEngine
from hyperhh.domains import generate_instance, make_domain
from hyperhh.selectors import luby
from hyperhh.stats import (
    DEFAULT_POINTS,
    rank_points,
    wilcoxon_signed_rank,
    wilcoxon_signed_rank_detail,
)
from hyperhh.stats import normalize_medians
from hyperhh.virtual import VirtualLLH, apply_virtual_llh, domain_amplification


def report(num: int, ok: bool, desc: str) -> None:
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {desc}")
    assert ok, f"criterion {num} failed: {desc}"


# ---------------------------------------------------------------------------
# 1-5: statistic, schedule, acceptance, Luby
# ---------------------------------------------------------------------------


def test_criterion_01_mu_incremental_equals_batch_mean():
    rng = random.Random(1001)
    worst = 0.0
    for _ in range(1000):
        stats = ImprovementStats()
        cost = rng.uniform(10.0, 1e6)
        deltas = []
        for _ in range(rng.randrange(1, 80)):
            new = cost - rng.uniform(-5.0, 20.0)
            if new < cost:
                deltas.append(cost - new)
            update_mu(stats, cost, new)
            cost = max(new, 0.0)
        if deltas:
            batch = sum(deltas) / len(deltas)
            worst = max(worst, abs(stats.mu - batch) / batch)
        assert stats.n_imp == len(deltas)
    report(1, worst < 1e-9, f"incremental mu vs batch mean, worst rel err {worst:.2e}")


def test_criterion_02_exp_schedule_endpoints_and_midpoint():
    sched = ExpTau(5.0, 1.0)
    ok = (
        effective_tau(sched, 0.0) == 5.0
        and effective_tau(sched, 1.0) == 1.0
        and abs(effective_tau(sched, 0.5) - math.sqrt(5.0)) / math.sqrt(5.0) < 1e-12
        and effective_tau(ExpTau(0.5, 0.25), 0.0) == 0.5
        and effective_tau(ExpTau(0.5, 0.25), 1.0) == 0.25
    )
    report(2, ok, "EXP endpoints exact, Exp(5,1) midpoint = sqrt(5) within 1e-12")


def test_criterion_03_acceptance_truth_tables():
    rng = random.Random(1003)
    mismatches = 0
    for _ in range(10_000):
        mu = rng.choice([0.0, rng.uniform(1e-9, 50.0)])
        tau = rng.uniform(0.05, 10.0)
        x = rng.random()
        c_best = rng.uniform(0.0, 1000.0)
        c_cur = c_best + rng.uniform(0.0, 100.0)
        c_new = c_cur + rng.uniform(-50.0, 50.0)
        if rng.random() < 0.1:
            c_new = c_cur  # exercise the equal-cost boundary
        schedule = ConstTau(tau) if rng.random() < 0.5 else ExpTau(tau, tau / 2)
        eff = effective_tau(schedule, x)
        got_ta = accept(Threshold(schedule), mu, c_best, c_cur, c_new, x, 0.0)
        got_r2r = accept(RecordToRecord(schedule), mu, c_best, c_cur, c_new, x, 0.0)
        if c_new < c_cur:
            want_ta = want_r2r = True
        elif mu == 0.0:
            want_ta = want_r2r = False
        else:
            want_ta = c_new <= c_cur + eff * mu
            want_r2r = c_new <= c_best + eff * mu
        mismatches += (got_ta != want_ta) + (got_r2r != want_r2r)

    ma = Metropolis(ConstTau(2.0))
    delta, mu = 3.0, 1.5  # acceptance probability e^(-3 / (2 * 1.5)) = e^-1
    target = math.exp(-delta / (2.0 * mu))
    mc = random.Random(1033)
    hits = sum(
        accept(ma, mu, 0.0, 10.0, 10.0 + delta, 0.0, mc.random()) for _ in range(100_000)
    )
    ma_err = abs(hits / 100_000 - target)
    report(
        3,
        mismatches == 0 and ma_err < 0.01,
        f"TA/R2R exact on 1e4 grid ({mismatches} mismatches); "
        f"MA Monte Carlo err {ma_err:.4f}",
    )


def test_criterion_04_scale_equivariance():
    rng = random.Random(1004)
    decision_flips = 0
    worst_prob = 0.0
    for _ in range(2000):
        mu = rng.uniform(1e-6, 100.0)
        tau = rng.uniform(0.05, 10.0)
        x = rng.random()
        c_best = rng.uniform(0.1, 1000.0)
        c_cur = c_best + rng.uniform(0.0, 100.0)
        c_new = c_cur + rng.uniform(-50.0, 50.0)
        r = rng.random()
        sched = ConstTau(tau)
        base_ta = accept(Threshold(sched), mu, c_best, c_cur, c_new, x, r)
        base_r2r = accept(RecordToRecord(sched), mu, c_best, c_cur, c_new, x, r)
        base_p = Metropolis(sched).acceptance_probability(mu, c_cur, c_new, x)
        for lam in (1e-3, 1.0, 1e3):
            got_ta = accept(
                Threshold(sched), mu * lam, c_best * lam, c_cur * lam, c_new * lam, x, r
            )
            got_r2r = accept(
                RecordToRecord(sched), mu * lam, c_best * lam, c_cur * lam, c_new * lam, x, r
            )
            decision_flips += (got_ta != base_ta) + (got_r2r != base_r2r)
            p = Metropolis(sched).acceptance_probability(mu * lam, c_cur * lam, c_new * lam, x)
            if base_p > 0:
                worst_prob = max(worst_prob, abs(p - base_p) / base_p)
    report(
        4,
        decision_flips == 0 and worst_prob < 1e-9,
        f"lambda scaling: {decision_flips} decision flips, "
        f"MA prob worst rel diff {worst_prob:.2e}",
    )


def test_criterion_05_luby_first_64_terms():
    def oracle(i):
        k = 1
        while (1 << k) - 1 < i:
            k += 1
        if (1 << k) - 1 == i:
            return 1 << (k - 1)
        return oracle(i - (1 << (k - 1)) + 1)

    got = [luby(i) for i in range(1, 65)]
    want = [oracle(i) for i in range(1, 65)]
    report(5, got == want, f"first 64 Luby terms match brute-force recursion")


# ---------------------------------------------------------------------------
# 6-8: virtual LLH layer
# ---------------------------------------------------------------------------


def _engine_for(name, size, gen_seed, rng_seed):
    instance = generate_instance(name, size, gen_seed)
    domain = make_domain(name, instance, rng=random.Random(rng_seed))
    engine = SearchEngine(domain, BudgetClock.virtual(10 ** 12))
    engine.clock.start()
    return domain, engine


def test_criterion_06_identity_wrapper_transparency():
    cases = 0
    for name, size in (("maxsat", 60), ("binpacking", 40), ("tsp", 25)):
        instance = generate_instance(name, size, 500)
        llhs = make_domain(name, instance, rng=random.Random(0)).llh_set()
        per_llh = 100 // len(llhs)
        for llh in llhs:
            for trial in range(per_llh):
                seed = 7000 + trial
                d1 = make_domain(name, instance, rng=random.Random(seed))
                d2 = make_domain(name, instance, rng=random.Random(seed))
                e1 = SearchEngine(d1, BudgetClock.virtual(10 ** 9))
                e2 = SearchEngine(d2, BudgetClock.virtual(10 ** 9))
                e1.clock.start(), e2.clock.start()
                e1.init_solution(0), e1.init_solution(2)
                e2.init_solution(0), e2.init_solution(2)
                d1.xo_mate_register = 2
                d2.xo_mate_register = 2
                direct = e1.apply_llh(llh.id, 0, 1)
                wrapped = apply_virtual_llh(
                    e2, VirtualLLH(llh, AcceptAll()), ImprovementStats(),
                    e2.clock, random.Random(1), 0, 1,
                )
                assert direct == wrapped, (name, llh, trial)
                cases += 1
        assert cases >= 100 or name != "tsp"
    report(6, True, f"identity wrapping bit-exact on {cases} cases across 3 domains")


def test_criterion_07_discard_worse_safety():
    rng = random.Random(1007)
    total = 0
    for name, size in (("maxsat", 50), ("binpacking", 35), ("tsp", 20)):
        domain, engine = _engine_for(name, size, 77, 78)
        engine.init_solution(0)
        engine.init_solution(2)
        domain.xo_mate_register = 2
        llhs = domain.llh_set()
        run_rng = random.Random(79)
        for _ in range(3334):
            llh = llhs[rng.randrange(len(llhs))]
            duration = rng.choice([None, None, None, 0.05, 0.2])
            intensity = None
            if llh.intensity_sensitive and rng.random() < 0.5:
                intensity = rng.choice([0.05, 0.2, 0.6, 1.0])
            h = VirtualLLH(llh, DiscardWorse(), duration_ms=duration, intensity=intensity)
            before = engine.cost(0)
            after = apply_virtual_llh(
                engine, h, ImprovementStats(), engine.clock, run_rng, 0, 1
            )
            assert after <= before, (name, llh, duration, intensity)
            engine.copy_solution(1, 0)
            total += 1
    report(7, total >= 10_000, f"{total} discard-worse applications never worsened")


def test_criterion_08_domain_amplification_shape():
    ok = True
    for name, size in (("maxsat", 30), ("binpacking", 20), ("tsp", 12)):
        domain, _ = _engine_for(name, size, 88, 89)
        source = domain.llh_set()
        vset = domain_amplification(source)
        ok &= len(vset) == 2 * len(source)
        originals = list(vset)[: len(source)]
        duplicates = list(vset)[len(source):]
        ok &= all(
            isinstance(e.acceptance, AcceptAll) and e.duration_ms is None for e in originals
        )
        ok &= all(
            isinstance(e.acceptance, DiscardWorse) and e.duration_ms == 10.0
            for e in duplicates
        )
    report(8, ok, "amplified sets double size with 10 ms discard-worse duplicates")


# ---------------------------------------------------------------------------
# 9-10: scoring and statistics
# ---------------------------------------------------------------------------


def test_criterion_09_f1_hand_tables_and_pot_conservation():
    # 20 hand-computed allocations, including 2-way, 3-way, and 4-way ties
    tables = [
        ({"a": 1.0}, {"a": 10}),
        ({"a": 1.0, "b": 2.0}, {"a": 10, "b": 8}),
        ({"a": 1.0, "b": 1.0}, {"a": 9, "b": 9}),
        ({"a": 5.0, "b": 7.0, "c": 9.0}, {"a": 10, "b": 8, "c": 6}),
        ({"a": 5.0, "b": 5.0, "c": 9.0}, {"a": 9, "b": 9, "c": 6}),
        ({"a": 1.0, "b": 2.0, "c": 2.0}, {"a": 10, "b": 7, "c": 7}),
        ({"a": 1.0, "b": 1.0, "c": 1.0}, {"a": 8, "b": 8, "c": 8}),
        (
            {f"m{i}": float(i) for i in range(1, 9)},
            {f"m{i}": p for i, p in zip(range(1, 9), [10, 8, 6, 5, 4, 3, 2, 1])},
        ),
        (
            {f"m{i}": float(i) for i in range(1, 10)},
            {f"m{i}": p for i, p in zip(range(1, 10), [10, 8, 6, 5, 4, 3, 2, 1, 0])},
        ),
        (
            {**{f"m{i}": float(i) for i in range(1, 8)}, "t1": 8.0, "t2": 8.0},
            {**{f"m{i}": p for i, p in zip(range(1, 8), [10, 8, 6, 5, 4, 3, 2])},
             "t1": 0.5, "t2": 0.5},
        ),
        (
            {**{f"m{i}": float(i) for i in range(1, 7)},
             "t1": 7.0, "t2": 7.0, "t3": 7.0, "z": 8.0},
            {**{f"m{i}": p for i, p in zip(range(1, 7), [10, 8, 6, 5, 4, 3])},
             "t1": 1.0, "t2": 1.0, "t3": 1.0, "z": 0.0},
        ),
        (
            {"t1": 1.0, "t2": 1.0, "t3": 1.0, "d": 2.0},
            {"t1": 8, "t2": 8, "t3": 8, "d": 5},
        ),
        (
            {"a": 1.0, "b": 1.0, "c": 2.0, "d": 3.0, "e": 3.0},
            {"a": 9, "b": 9, "c": 6, "d": 4.5, "e": 4.5},
        ),
        (
            {f"m{i}": float(i) for i in range(1, 7)},
            {f"m{i}": p for i, p in zip(range(1, 7), [10, 8, 6, 5, 4, 3])},
        ),
        (
            {"m1": 1.0, "m2": 2.0, "t1": 3.0, "t2": 3.0, "t3": 3.0, "m6": 4.0, "m7": 5.0},
            {"m1": 10, "m2": 8, "t1": 5, "t2": 5, "t3": 5, "m6": 3, "m7": 2},
        ),
        (
            {f"m{i}": float(i) for i in range(1, 13)},
            {f"m{i}": p for i, p in zip(range(1, 13), [10, 8, 6, 5, 4, 3, 2, 1, 0, 0, 0, 0])},
        ),
        (
            {f"m{i}": 7.0 for i in range(1, 13)},
            {f"m{i}": 39 / 12 for i in range(1, 13)},
        ),
        (
            {**{f"m{i}": float(i) for i in range(1, 8)}, "t1": 8.0, "t2": 8.0, "z": 9.0},
            {**{f"m{i}": p for i, p in zip(range(1, 8), [10, 8, 6, 5, 4, 3, 2])},
             "t1": 0.5, "t2": 0.5, "z": 0.0},
        ),
        (
            {"a": 1.0, "b": 1.0, "c": 1.0, "d": 2.0, "e": 2.0, "f": 2.0},
            {"a": 8, "b": 8, "c": 8, "d": 4, "e": 4, "f": 4},
        ),
        (
            {"t1": 1.0, "t2": 1.0, "t3": 1.0, "t4": 1.0,
             "m5": 2.0, "m6": 3.0, "m7": 4.0, "m8": 5.0},
            {"t1": 7.25, "t2": 7.25, "t3": 7.25, "t4": 7.25,
             "m5": 4, "m6": 3, "m7": 2, "m8": 1},
        ),
    ]
    assert len(tables) == 20
    for medians, expected in tables:
        got = rank_points(medians)
        assert got == {k: float(v) for k, v in expected.items()}, (medians, got, expected)

    rng = random.Random(1009)
    for _ in range(1000):
        n = rng.randrange(1, 14)
        pool = [1.0, 2.0, 3.0, rng.uniform(0, 5), rng.uniform(0, 5)]
        medians = {f"m{i}": rng.choice(pool) for i in range(n)}
        pts = rank_points(medians)
        pot = sum(DEFAULT_POINTS[: min(8, n)])
        assert abs(sum(pts.values()) - pot) < 1e-9
    report(9, True, "20 hand tables exact; pot conserved on 1000 fuzzed tables")


def test_criterion_10_wilcoxon_exact_and_textbook():
    def ranks_of(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        ranks = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            for k in range(i, j + 1):
                ranks[order[k]] = (i + j + 2) / 2
            i = j + 1
        return ranks

    worst = 0.0
    for n in range(5, 13):
        for magnitudes in ([float(i) for i in range(1, n + 1)],
                           [float(1 + i // 2) for i in range(n)]):  # with ties
            ranks = ranks_of(magnitudes)
            dist = {}
            for signs in itertools.product((1, -1), repeat=n):
                w = sum(r for s, r in zip(signs, ranks) if s > 0)
                dist[w] = dist.get(w, 0) + 1
            total = 2 ** n
            for signs in itertools.product((1, -1), repeat=n):
                pairs = [(0.0, s * m) for s, m in zip(signs, magnitudes)]
                got = wilcoxon_signed_rank(pairs, warn=False)
                w_obs = sum(r for s, r in zip(signs, ranks) if s > 0)
                want = sum(c for w, c in dist.items() if w >= w_obs - 1e-9) / total
                worst = max(worst, abs(got - want))

    x = [1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30]
    y = [0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29]
    detail = wilcoxon_signed_rank_detail(list(zip(y, x)))
    textbook_ok = (
        abs(detail.w_plus - 40.0) < 1e-9 and abs(detail.p_value - 0.01953125) < 1e-3
    )
    report(
        10,
        worst < 1e-12 and textbook_ok,
        f"enumeration match (worst dev {worst:.1e}); textbook W=40 p=0.0195",
    )


# ---------------------------------------------------------------------------
# 11-13: desk-scale directional reproduction (shared wall-clock matrix)
# ---------------------------------------------------------------------------


def _mean_normalized(records):
    normalized = normalize_medians(records)
    instances = sorted({i for _, i in normalized})
    methods = sorted({m for m, _ in normalized})
    means = {
        m: sum(normalized[(m, i)] for i in instances) / len(instances) for m in methods
    }
    return normalized, means, instances


def _pairwise_p(normalized, instances, better, worse):
    pairs = [(normalized[(better, i)], normalized[(worse, i)]) for i in instances]
    return wilcoxon_signed_rank(pairs, warn=False)


def test_criterion_11_nhh_variant_ladder(wall_matrix_records):
    records = wall_matrix_records
    assert all(r.error is None for r in records), "matrix contains failed cells"
    normalized, means, instances = _mean_normalized(records)
    chain = ["NHH-Xstar", "NHH-XAR", "NHH-XA", "NHH-X0"]
    mean_ok = all(means[a] < means[b] for a, b in zip(chain, chain[1:]))
    ps = {
        (a, b): _pairwise_p(normalized, instances, a, b) for a, b in zip(chain, chain[1:])
    }
    p_plus = _pairwise_p(normalized, instances, "NHH-Xplus", "NHH-X0")
    plus_ok = means["NHH-Xplus"] < means["NHH-X0"] and p_plus < 0.05
    detail = ", ".join(
        f"{a.split('-')[1]}<{b.split('-')[1]} p={p:.4f}" for (a, b), p in ps.items()
    )
    ok = mean_ok and all(p < 0.05 for p in ps.values()) and plus_ok
    report(
        11,
        ok,
        f"NHH ladder means {', '.join(f'{m}={means[m]:.3f}' for m in chain)}; "
        f"{detail}; Xplus<X0 p={p_plus:.4f}",
    )


def test_criterion_12_luby_variant_ladder(wall_matrix_records):
    records = wall_matrix_records
    normalized, means, instances = _mean_normalized(records)
    chain = ["LUBY-Xstar", "LUBY-Xplus", "LUBY-X0"]
    mean_ok = all(means[a] < means[b] for a, b in zip(chain, chain[1:]))
    ps = {
        (a, b): _pairwise_p(normalized, instances, a, b) for a, b in zip(chain, chain[1:])
    }
    ok = mean_ok and all(p < 0.05 for p in ps.values())
    report(
        12,
        ok,
        f"LUBY ladder means {', '.join(f'{m}={means[m]:.3f}' for m in chain)}; "
        + ", ".join(f"{a.split('-')[1]}<{b.split('-')[1]} p={p:.4f}" for (a, b), p in ps.items()),
    )


def test_criterion_13_each_acceptance_strategy_beats_baseline(wall_matrix_records):
    records = wall_matrix_records
    _, means, _ = _mean_normalized(records)
    singles = [
        "NHH-MA-CONST", "NHH-TA-CONST", "NHH-R2R-CONST",
        "NHH-MA-EXP", "NHH-TA-EXP", "NHH-R2R-EXP",
    ]
    baseline = means["NHH-X0"]
    verdicts = {s: means[s] < baseline for s in singles}
    ok = all(verdicts.values())
    report(
        13,
        ok,
        f"X0 mean {baseline:.3f}; "
        + ", ".join(f"{s.replace('NHH-', '')}={means[s]:.3f}" for s in singles),
    )


# ---------------------------------------------------------------------------
# 14: determinism of the virtual-clock mini-benchmark
# ---------------------------------------------------------------------------


def test_criterion_14_virtual_mode_byte_identical(tmp_path):
    from hyperhh import minibench
    from hyperhh.bench import ExperimentConfig, run_matrix

    outputs = {}
    for label, workers in (("serial-1", 1), ("serial-2", 1), ("parallel", 2)):
        config = ExperimentConfig.from_dict(
            minibench.config_dict(
                str(tmp_path / label), mode="virtual", workers=workers
            )
        )
        records = run_matrix(config, progress=False)
        csv_path = tmp_path / f"{label}.csv"
        write_results_csv(records, csv_path)
        outputs[label] = csv_path.read_bytes()
    ok = (
        outputs["serial-1"] == outputs["serial-2"]
        and outputs["serial-1"] == outputs["parallel"]
    )
    report(14, ok, "virtual-mode results.csv byte-identical: rerun and serial-vs-parallel")
