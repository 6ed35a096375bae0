"""Cross-domain selection hyper-heuristics over transformed LLH sets.

The package splits into the engine contract (:mod:`hyperhh.core`), the
mu-normalized acceptance criteria (:mod:`hyperhh.acceptance`), the
virtual-LLH transformation layer (:mod:`hyperhh.virtual`), the built-in
selectors and variant ladder (:mod:`hyperhh.selectors`), three desk-scale
problem domains (:mod:`hyperhh.domains`), and the benchmark harness
(:mod:`hyperhh.bench`, :mod:`hyperhh.stats`, :mod:`hyperhh.cli`).
"""

from .acceptance import (
    AcceptAll,
    AcceptanceStrategy,
    ConstTau,
    DiscardWorse,
    ExpTau,
    ImprovementStats,
    Metropolis,
    RecordToRecord,
    TauSchedule,
    Threshold,
    accept,
    effective_tau,
    preset_table,
    update_mu,
)
from .core import (
    BudgetClock,
    ConfigurationError,
    Domain,
    EmptyRegisterError,
    EngineError,
    LLHCategory,
    LLHDescriptor,
    SearchEngine,
    ValidationError,
    consumed_fraction,
    register_bank_copy,
)
from .selectors import (
    HyperHeuristicRun,
    LubySelector,
    NHHSelector,
    RunFactory,
    Selector,
    SelectorState,
    build_variant,
    luby,
    luby_step,
    nhh_select,
    nhh_step,
)
from .stats import (
    F1Table,
    ScoringError,
    f1_scores,
    normalize_medians,
    rank_points,
    wilcoxon_signed_rank,
    wilcoxon_signed_rank_detail,
)
from .virtual import (
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

__version__ = "0.1.0"

__all__ = [
    "AcceptAll",
    "AcceptanceStrategy",
    "BudgetClock",
    "ConfigurationError",
    "ConstTau",
    "DiscardWorse",
    "Domain",
    "EmptyRegisterError",
    "EngineError",
    "ExpTau",
    "F1Table",
    "HyperHeuristicRun",
    "ImprovementStats",
    "LLHCategory",
    "LLHDescriptor",
    "LubySelector",
    "Metropolis",
    "NHHSelector",
    "RecordToRecord",
    "RunFactory",
    "ScoringError",
    "SearchEngine",
    "Selector",
    "SelectorState",
    "SETUP_I",
    "SETUP_II",
    "SETUP_III",
    "TauSchedule",
    "Threshold",
    "TransformSpec",
    "ValidationError",
    "VirtualLLH",
    "VirtualLLHSet",
    "accept",
    "apply_virtual_llh",
    "build_variant",
    "consumed_fraction",
    "domain_amplification",
    "effective_tau",
    "f1_scores",
    "luby",
    "luby_step",
    "nhh_select",
    "nhh_step",
    "normalize_medians",
    "preset_table",
    "rank_points",
    "register_bank_copy",
    "star_preset",
    "transform",
    "update_mu",
    "wilcoxon_signed_rank",
    "wilcoxon_signed_rank_detail",
]
