import random

import pytest

from hyperhh.acceptance import (
    AcceptAll,
    ConstTau,
    DiscardWorse,
    ExpTau,
    ImprovementStats,
    Metropolis,
    RecordToRecord,
)
from hyperhh.core import (
    BudgetClock,
    ConfigurationError,
    Domain,
    LLHCategory,
    LLHDescriptor,
    SearchEngine,
)
from hyperhh.domains import generate_instance, make_domain
from hyperhh.virtual import (
    SETUP_I,
    SETUP_II,
    SETUP_III,
    TransformSpec,
    VirtualLLH,
    VirtualLLHSet,
    apply_virtual_llh,
    domain_amplification,
    star_preset,
    transform,
)

LS = LLHCategory.LS
RR = LLHCategory.RR
MUT = LLHCategory.MUT
XO = LLHCategory.XO


class _CountingState:
    __slots__ = ("cost",)

    def __init__(self, cost):
        self.cost = cost

    def copy(self):
        return _CountingState(self.cost)


class CountingDomain(Domain):
    """Minimal stub: LLH 0 improves cost by 1 (floor 0), LLH 1 randomizes it."""

    def __init__(self, rng=None, start=100.0):
        super().__init__(n_registers=8, rng=rng)
        self.start = start
        self.applies = 0
        self._descriptors = [
            LLHDescriptor(0, LS),
            LLHDescriptor(1, MUT, intensity_sensitive=True),
        ]

    def llh_set(self):
        return list(self._descriptors)

    def init_solution(self, register):
        self._check_register(register)
        self._registers[register] = _CountingState(self.start)

    def apply_llh(self, llh_id, src, dst):
        state = self._slot(src)
        self._check_register(dst)
        self.applies += 1
        if llh_id == 0:
            new_cost = max(0.0, state.cost - 1.0)
        else:
            new_cost = self.rng.uniform(0.0, 2.0) * self.start
        self._registers[dst] = _CountingState(new_cost)
        return new_cost

    def recompute_cost(self, register):
        return self._slot(register).cost


def _descriptor_roster(n_rr=1, n_mut=1, n_ls=1, n_xo=1):
    out = []
    i = 0
    for _ in range(n_ls):
        out.append(LLHDescriptor(i, LS))
        i += 1
    for _ in range(n_rr):
        out.append(LLHDescriptor(i, RR, intensity_sensitive=True))
        i += 1
    for _ in range(n_mut):
        out.append(LLHDescriptor(i, MUT, intensity_sensitive=True))
        i += 1
    for _ in range(n_xo):
        out.append(LLHDescriptor(i, XO))
        i += 1
    return out


class TestVirtualLLHTypes:
    def test_intensity_only_on_perturbative_bases(self):
        with pytest.raises(ConfigurationError):
            VirtualLLH(LLHDescriptor(0, LS), AcceptAll(), intensity=0.3)
        VirtualLLH(LLHDescriptor(0, RR, intensity_sensitive=True), AcceptAll(), intensity=0.3)

    def test_category_index_partitions_entries(self):
        entries = [VirtualLLH(d, AcceptAll()) for d in _descriptor_roster(2, 3, 1, 1)]
        vset = VirtualLLHSet(entries)
        covered = sorted(i for idxs in vset.category_index.values() for i in idxs)
        assert covered == list(range(len(entries)))
        for cat, idxs in vset.category_index.items():
            assert all(vset[i].base.category == cat for i in idxs)

    def test_transform_spec_validation(self):
        with pytest.raises(ConfigurationError):
            TransformSpec(frozenset({RR}), intensities=())
        with pytest.raises(ConfigurationError):
            TransformSpec(frozenset({RR}), intensities=(1.5,))
        with pytest.raises(ConfigurationError):
            TransformSpec(frozenset({RR}), duration_ms=0.0)


class TestTransform:
    def test_identity_transform(self):
        source = _descriptor_roster()
        vset = transform(source, [])
        assert len(vset) == len(source)
        for entry in vset:
            assert isinstance(entry.acceptance, AcceptAll)
            assert entry.duration_ms is None
            assert entry.intensity is None

    def test_intensity_duplication_count(self):
        # 2 RR heuristics x 3 intensities -> 6 RR entries
        source = _descriptor_roster(n_rr=2, n_mut=0, n_ls=0, n_xo=0)
        vset = transform(source, [TransformSpec(frozenset({RR}), intensities=SETUP_III)])
        assert len(vset) == 6
        assert [e.intensity for e in vset] == [0.1, 0.2, 0.3, 0.1, 0.2, 0.3]

    def test_setup_ii_duplication(self):
        source = [LLHDescriptor(0, MUT, intensity_sensitive=True)]
        vset = transform(source, [TransformSpec(frozenset({MUT}), intensities=SETUP_II)])
        assert len(vset) == 9
        assert [e.intensity for e in vset] == [0.05, 0.05, 0.05, 0.05, 0.1, 0.1, 0.2, 0.3, 0.5]

    def test_duplication_count_formula(self):
        source = _descriptor_roster(n_rr=2, n_mut=1, n_ls=2, n_xo=1)
        specs = [
            TransformSpec(frozenset({RR, MUT}), intensities=SETUP_III),
            TransformSpec(frozenset({LS}), duration_ms=1.0),
        ]
        vset = transform(source, specs)
        # 2 RR * 3 + 1 MUT * 3 + 2 LS + 1 XO
        assert len(vset) == 2 * 3 + 1 * 3 + 2 + 1

    def test_later_specs_refine_earlier(self):
        source = _descriptor_roster()
        first = TransformSpec(
            frozenset({RR}), acceptance=RecordToRecord(ConstTau(1.0)), duration_ms=5.0
        )
        second = TransformSpec(frozenset({RR}), acceptance=Metropolis(ConstTau(2.0)))
        vset = transform(source, [first, second])
        rr_entries = [vset[i] for i in vset.in_category(RR)]
        assert len(rr_entries) == 1
        assert isinstance(rr_entries[0].acceptance, Metropolis)
        assert rr_entries[0].duration_ms == 5.0  # kept from the first spec

    def test_untargeted_pass_through_with_default(self):
        source = _descriptor_roster()
        default = DiscardWorse()
        vset = transform(
            source, [TransformSpec(frozenset({RR}), duration_ms=1.0)], default_accept=default
        )
        ls_entry = vset[vset.in_category(LS)[0]]
        assert isinstance(ls_entry.acceptance, DiscardWorse)
        assert ls_entry.duration_ms is None

    def test_intensity_on_insensitive_category_rejected(self):
        source = [LLHDescriptor(0, RR, intensity_sensitive=False)]
        with pytest.raises(ConfigurationError):
            transform(source, [TransformSpec(frozenset({RR}), intensities=(0.1,))])

    def test_mixed_sensitivity_category(self):
        source = [
            LLHDescriptor(0, RR, intensity_sensitive=True),
            LLHDescriptor(1, RR, intensity_sensitive=False),
        ]
        vset = transform(source, [TransformSpec(frozenset({RR}), intensities=(0.1, 0.2))])
        sensitive = [e for e in vset if e.base.id == 0]
        insensitive = [e for e in vset if e.base.id == 1]
        assert len(sensitive) == 2 and len(insensitive) == 1
        assert insensitive[0].intensity is None

    def test_xo_passthrough_no_duplication(self):
        source = _descriptor_roster()
        vset = transform(
            source,
            [TransformSpec(frozenset({XO, RR}), acceptance=Metropolis(ConstTau(1.0)),
                           intensities=(0.1, 0.2))],
        )
        xo_entries = [vset[i] for i in vset.in_category(XO)]
        assert len(xo_entries) == 1
        assert xo_entries[0].intensity is None
        assert isinstance(xo_entries[0].acceptance, Metropolis)


class TestDomainAmplification:
    def test_doubles_set_size(self):
        source = _descriptor_roster(n_rr=3, n_mut=4, n_ls=3, n_xo=2)
        assert len(source) == 12
        vset = domain_amplification(source)
        assert len(vset) == 24

    def test_amplified_duplicates_carry_10ms_discard_worse(self):
        source = _descriptor_roster()
        vset = domain_amplification(source)
        originals = list(vset)[: len(source)]
        duplicates = list(vset)[len(source):]
        for entry in originals:
            assert isinstance(entry.acceptance, AcceptAll)
            assert entry.duration_ms is None
        for entry in duplicates:
            assert isinstance(entry.acceptance, DiscardWorse)
            assert entry.duration_ms == 10.0
            assert entry.intensity is None


class TestStarPreset:
    @pytest.mark.parametrize(
        "method,tau_start,duration,setup",
        [("NHH", 5.0, 1.0, SETUP_II), ("LUBY", 7.5, 0.5, SETUP_III), ("MC", 10.0, 0.5, SETUP_II)],
    )
    def test_benchmark_presets(self, method, tau_start, duration, setup):
        specs = star_preset(method, "benchmark")
        acc, dur, inten = specs
        assert acc.categories == frozenset({RR, MUT})
        assert isinstance(acc.acceptance, RecordToRecord)
        assert acc.acceptance.schedule == ExpTau(tau_start, 1.0)
        assert dur.categories == frozenset({LS, RR, MUT})
        assert dur.duration_ms == duration
        assert inten.intensities == setup

    def test_real_world_duration_override(self):
        for method in ("NHH", "LUBY", "MC"):
            specs = star_preset(method, "real_world")
            assert specs[1].duration_ms == 10.0
        assert star_preset("LUBY", "real_world")[0].acceptance.schedule == ExpTau(7.5, 1.0)

    def test_unknown_method_rejected(self):
        with pytest.raises(ConfigurationError):
            star_preset("GIHH")


class TestApplyVirtualLLH:
    def _engine(self, rng_seed=1, clock=None):
        domain = CountingDomain(rng=random.Random(rng_seed))
        clock = clock or BudgetClock.virtual(1_000_000)
        clock.start()
        engine = SearchEngine(domain, clock)
        engine.init_solution(0)
        return domain, engine

    def test_single_application_without_duration(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll())
        stats = ImprovementStats()
        cost = apply_virtual_llh(engine, h, stats, engine.clock, random.Random(2), 0, 1)
        assert domain.applies == 1
        assert cost == engine.cost(1) == 99.0

    def test_at_least_one_iteration_with_tiny_duration(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll(), duration_ms=0.001)
        apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(2), 0, 1)
        assert domain.applies == 1

    def test_duration_repeats_until_tick_budget(self):
        domain, engine = self._engine()
        # 5 ms at 1000 ticks/ms with 1-tick applies -> exactly 5000 iterations
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll(), duration_ms=5.0)
        apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(2), 0, 1)
        assert domain.applies == 5000

    def test_returned_cost_matches_target_register(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(1, MUT, intensity_sensitive=True), AcceptAll())
        cost = apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(3), 0, 2)
        assert cost == engine.cost(2)

    def test_mu_updates_count_strict_improvements(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll(), duration_ms=0.01)
        stats = ImprovementStats()
        apply_virtual_llh(engine, h, stats, engine.clock, random.Random(2), 0, 1)
        # LS improves by exactly 1 per iteration: n_imp == iterations, mu == 1
        assert stats.n_imp == domain.applies
        assert stats.mu == pytest.approx(1.0)

    def test_discard_worse_never_worsens(self):
        domain, engine = self._engine(rng_seed=5)
        h = VirtualLLH(
            LLHDescriptor(1, MUT, intensity_sensitive=True), DiscardWorse(), duration_ms=0.05
        )
        start = engine.cost(0)
        cost = apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(4), 0, 1)
        assert cost <= start

    def test_intensity_set_and_restored(self):
        domain, engine = self._engine()
        h = VirtualLLH(
            LLHDescriptor(1, MUT, intensity_sensitive=True), AcceptAll(), intensity=0.77
        )
        seen = {}
        original_apply = domain.apply_llh

        def spy(llh_id, src, dst):
            seen["intensity"] = domain.perturbation_intensity
            return original_apply(llh_id, src, dst)

        domain.apply_llh = spy
        before = domain.perturbation_intensity
        apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(4), 0, 1)
        assert seen["intensity"] == 0.77
        assert domain.perturbation_intensity == before

    def test_no_intensity_means_domain_default_used(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(1, MUT, intensity_sensitive=True), AcceptAll())
        before = domain.perturbation_intensity
        apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(4), 0, 1)
        assert domain.perturbation_intensity == before

    def test_source_register_keeps_original_when_distinct(self):
        domain, engine = self._engine()
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll())
        start = engine.cost(0)
        apply_virtual_llh(engine, h, ImprovementStats(), engine.clock, random.Random(2), 0, 1)
        assert engine.cost(0) == start

    def test_wrapper_transparency_across_real_domains(self):
        # identity wrapping reproduces a direct application bit-exactly
        cases = [("maxsat", 40), ("binpacking", 25), ("tsp", 20)]
        for name, size in cases:
            instance = generate_instance(name, size, 11)
            for trial in range(20):
                seed = 1000 + trial
                d1 = make_domain(name, instance, rng=random.Random(seed))
                d2 = make_domain(name, instance, rng=random.Random(seed))
                for llh in d1.llh_set():
                    if llh.category == XO:
                        continue
                    e1 = SearchEngine(d1, BudgetClock.virtual(10**9))
                    e2 = SearchEngine(d2, BudgetClock.virtual(10**9))
                    e1.clock.start(), e2.clock.start()
                    e1.init_solution(0)
                    e2.init_solution(0)
                    direct = e1.apply_llh(llh.id, 0, 1)
                    wrapped = apply_virtual_llh(
                        e2, VirtualLLH(llh, AcceptAll()), ImprovementStats(),
                        e2.clock, random.Random(0), 0, 1,
                    )
                    assert direct == wrapped, (name, llh, seed)

    def test_wall_clock_duration_bounds_iterations(self):
        domain = CountingDomain(rng=random.Random(1))
        clock = BudgetClock.wall(10.0)
        clock.start()
        engine = SearchEngine(domain, clock)
        engine.init_solution(0)
        h = VirtualLLH(LLHDescriptor(0, LS), AcceptAll(), duration_ms=5.0)
        import time

        t0 = time.perf_counter()
        apply_virtual_llh(engine, h, ImprovementStats(), clock, random.Random(2), 0, 1)
        elapsed_ms = (time.perf_counter() - t0) * 1000
        assert domain.applies >= 1
        assert elapsed_ms < 100.0  # 5 ms timeout with sub-us iterations
