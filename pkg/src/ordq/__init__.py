"""ordq: symbolic transfinite computations with oracle query ledgers."""

from .ordcalc import (
    OMEGA,
    ONE,
    ZERO,
    Ordinal,
    OrdinalDomainError,
    OrdinalParseError,
    add,
    classify,
    compare,
    finite_part,
    leading_exponent,
    left_sub,
    mul,
    omega_power,
    opow,
    parse_ordinal,
    render,
    successor,
)
from .universe import (
    CardinalStructure,
    HFSet,
    NoSuchCardinalError,
    OutOfStructureError,
    SetCode,
    card_of,
    decode_set,
    encode_hf,
    explicit_list,
    hf,
    hf_card,
    hf_powerset,
    is_cardinal,
    multiples_of_omega,
    next_card_of,
    next_limit_of_cardinals_above,
    omega_powers,
    parse_hf,
    render_hf,
    sup_of_cardinals_below,
)
from .logic import (
    Formula,
    TruthEnv,
    classify_level,
    eval_formula,
    formula_from_index,
    formula_index,
    parse_formula,
    render_formula,
    universe_of,
)
from .oracles import (
    CardinalClassSet,
    Effectivizer,
    FiniteOrdinalSet,
    NotRankedError,
    OmegaMultiplesSet,
    OracleTypeError,
    OrdinalSet,
    QueryLedger,
    RunEntry,
    ScriptedEffectivizer,
    ScriptExhausted,
    ScriptMismatch,
    SingleEntry,
    answer,
    extract_script,
    flag_value_after,
    make_effectivizer,
)
from .tam import (
    Program,
    RunResult,
    replay,
    run,
    run_scripted,
)
from .reductions import (
    Approximator,
    BoundForm,
    CATALOG_NAMES,
    CompositeEffectivizer,
    ReductionSpec,
    ReductionTypeError,
    Report,
    catalog,
    compose,
    delegate_spec,
    verify,
)

__version__ = "0.1.0"
