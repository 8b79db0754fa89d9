"""Oracles, ranked ordinal sets, query ledgers and response scripts.

An Effectivizer is a deterministic oracle: a name plus an answer function.
Oracles whose queries are ordinals and whose answers are bits additionally
expose their hit set through the OrdinalSet contract below, which is what
lets the machine evaluate transfinite scans in closed form.  Those ranked
calls are interpreter machinery and are never ledgered; the ledger records
the order type of the pointwise calls they stand for.

A QueryLedger mixes two entry shapes.  Single entries log one call at one
time.  Run entries compress a whole scan: the window of queries it swept,
the order type of that window (which is what the ledger totals), and a
response pattern.  Two patterns cover hit-terminated scans ("all-0",
"all-0-then-final-1"); scans that sweep across many positive answers, such
as a last-hit search, use the pattern "oracle-hits", whose pointwise
responses are the oracle's hit set restricted to the window.  Run entries
keep that restriction as a descriptor so a recorded run can be replayed
exactly.

ScriptedEffectivizer replaces an oracle with recorded responses: either a
finite pointwise sequence (each call consumes one value) or the richer
segment list extracted from a previous run's ledger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

from .ordcalc import (
    OMEGA,
    ONE,
    ZERO,
    Ordinal,
    OrdinalLike,
    _coerce,
    add,
    finite_part,
    limit_part,
    omega_power,
    render,
    successor,
)
from . import universe as _u
from .universe import (
    CardinalStructure,
    HFSet,
    NoSuchCardinalError,
    OutOfStructureError,
    SetCode,
    decode_set,
    encode_hf,
    hf_card,
    hf_powerset,
    render_hf,
)
from .logic import TruthEnv, classify_level, eval_formula, formula_from_index

PATTERN_ALL_ZERO = "all-0"
PATTERN_FINAL_ONE = "all-0-then-final-1"
PATTERN_ORACLE_HITS = "oracle-hits"


class OracleTypeError(TypeError):
    """Query shape does not match the oracle."""


class NotRankedError(TypeError):
    """Ranked scan support requested from a non-ranked oracle."""


class ScriptExhausted(RuntimeError):
    """A scripted oracle ran out of recorded responses."""


class ScriptMismatch(RuntimeError):
    """A scripted segment does not fit the call the machine is making."""


# -- ranked ordinal sets -----------------------------------------------------


class OrdinalSet:
    """A set of ordinals supporting closed-form rank queries.

    least_above is strict; greatest_at_most is inclusive and answers only
    when the members at most the argument have a maximum; next_limit_above
    is the least ordinal above the argument in which members are cofinal.
    sup_below reports the supremum of members strictly below the argument
    plus an attained bit (True iff that supremum is itself a member).
    None always means "no such point".
    """

    def contains(self, a: OrdinalLike) -> bool:
        raise NotImplementedError

    def least_above(self, a: OrdinalLike) -> Optional[Ordinal]:
        raise NotImplementedError

    def greatest_at_most(self, a: OrdinalLike) -> Optional[Ordinal]:
        raise NotImplementedError

    def next_limit_above(self, a: OrdinalLike) -> Optional[Ordinal]:
        raise NotImplementedError

    def sup_below(self, a: OrdinalLike) -> Optional[Tuple[Ordinal, bool]]:
        raise NotImplementedError

    def scan_horizon(self) -> Optional[Ordinal]:
        """Upper end of the window a diverging scan sweeps before giving up,
        when the set has a declared world boundary; None otherwise."""
        return None


class CardinalClassSet(OrdinalSet):
    """The cardinals of a structure, finite ordinals included."""

    def __init__(self, structure: CardinalStructure):
        self.structure = structure

    def contains(self, a):
        try:
            return bool(_u.is_cardinal(self.structure, a))
        except OutOfStructureError:
            return False

    def least_above(self, a):
        try:
            return _u.next_card_of(self.structure, a)
        except (NoSuchCardinalError, OutOfStructureError):
            return None

    def greatest_at_most(self, a):
        try:
            return _u.card_of(self.structure, a)
        except OutOfStructureError:
            return None

    def next_limit_above(self, a):
        try:
            return _u.next_limit_of_cardinals_above(self.structure, a)
        except (NoSuchCardinalError, OutOfStructureError):
            return None

    def sup_below(self, a):
        try:
            return _u.sup_of_cardinals_below(self.structure, a)
        except OutOfStructureError:
            return None

    def scan_horizon(self):
        return self.structure.bound


class FiniteOrdinalSet(OrdinalSet):
    """An explicit finite set; every rank query is a list walk."""

    def __init__(self, members):
        self.members = tuple(sorted({_coerce(m) for m in members}))

    def contains(self, a):
        return _coerce(a) in self.members

    def least_above(self, a):
        a = _coerce(a)
        for m in self.members:
            if m > a:
                return m
        return None

    def greatest_at_most(self, a):
        a = _coerce(a)
        best = None
        for m in self.members:
            if m <= a:
                best = m
        return best

    def next_limit_above(self, a):
        return None

    def sup_below(self, a):
        a = _coerce(a)
        below = [m for m in self.members if m < a]
        return (below[-1], True) if below else None


class OmegaMultiplesSet(OrdinalSet):
    """{w*n : n >= 1}; its single limit point is w^2."""

    W2 = omega_power(2)

    def contains(self, a):
        a = _coerce(a)
        return len(a.terms) == 1 and a.terms[0][0] == ONE

    def least_above(self, a):
        a = _coerce(a)
        if a < OMEGA:
            return OMEGA
        if a >= self.W2:
            return None
        return add(limit_part(a), OMEGA)

    def greatest_at_most(self, a):
        a = _coerce(a)
        if a < OMEGA:
            return None
        if a >= self.W2:
            return None  # members are cofinal under w^2: no maximum
        return limit_part(a)

    def next_limit_above(self, a):
        a = _coerce(a)
        return self.W2 if a < self.W2 else None

    def sup_below(self, a):
        a = _coerce(a)
        if a <= OMEGA:
            return None
        if a > self.W2:
            return (self.W2, False)
        if a == self.W2:
            return (a, False)
        if finite_part(a) > 0:
            return (limit_part(a), True)
        # a is itself w*n: the greatest member below is w*(n-1)
        n = a.terms[0][1]
        return (omega_power(1, n - 1), True) if n > 1 else None

    def scan_horizon(self):
        return self.W2


# -- flag limit behavior -----------------------------------------------------


def flag_value_after(initial: int, toggles: OrdinalSet, position: OrdinalLike) -> int:
    """Flag value right after stage `position`, toggling at every member of
    `toggles` at or below it, with the lim-inf rule at limits of toggles.

    Walking the toggles at or below the position backwards must reach, in
    finitely many steps (strict descent), either the bottom (no earlier
    toggle: apply parity to the initial bit) or a limit of toggles (where
    the value is 0 regardless of history: both states recur below it).
    """
    position = _coerce(position)
    state = toggles.sup_below(successor(position))
    if state is None:
        return initial
    current, attained = state
    if not attained:
        return 0
    parity = 0
    while True:
        parity ^= 1
        earlier = toggles.sup_below(current)
        if earlier is None:
            return initial ^ parity
        current, attained = earlier
        if not attained:
            return 0 ^ parity


# -- query ledger ------------------------------------------------------------


@dataclass(frozen=True)
class SingleEntry:
    time: Ordinal
    oracle: str
    query: str
    response: str
    response_value: Any = None

    def length(self) -> Ordinal:
        return ONE

    def to_json(self) -> dict:
        return {"kind": "single", "oracle": self.oracle, "from": self.query,
                "to": self.query, "order_type": "1", "response": self.response}


@dataclass(frozen=True)
class RunEntry:
    time: Ordinal
    oracle: str
    from_query: Ordinal
    to_query: Ordinal
    order_type: Ordinal
    pattern: str
    hits: Optional[OrdinalSet] = None

    def length(self) -> Ordinal:
        return self.order_type

    def to_json(self) -> dict:
        return {"kind": "run", "oracle": self.oracle,
                "from": render(self.from_query), "to": render(self.to_query),
                "order_type": render(self.order_type), "response": self.pattern}


LedgerEntry = Union[SingleEntry, RunEntry]


class QueryLedger:
    """Single-writer sequence of call records with ordinal accounting."""

    def __init__(self):
        self.entries: List[LedgerEntry] = []

    def append(self, entry: LedgerEntry):
        if entry.length().is_zero() and isinstance(entry, RunEntry):
            raise ValueError("run intervals must be nonempty")
        if self.entries and entry.time < self._next_time():
            raise ValueError("ledger entries must advance in time")
        self.entries.append(entry)

    def _next_time(self) -> Ordinal:
        last = self.entries[-1]
        return add(last.time, last.length())

    def total_order_type(self) -> Ordinal:
        total = ZERO
        for e in self.entries:
            total = add(total, e.length())
        return total

    def to_json(self) -> List[dict]:
        return [e.to_json() for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def ledger_total_order_type(ledger: QueryLedger) -> Ordinal:
    return ledger.total_order_type()


# -- effectivizers -----------------------------------------------------------


DEC_CARD = "DecCard"
NEXT_CARD = "NextCard"
ORD_CARD = "OrdCard"
POT = "Pot"
POWER_CARD = "PowerCard"
TRUTH = "TruthSigma"
SEP = "SepSigma"
SCRIPTED = "Scripted"


def summarize_query(q: Any) -> str:
    if isinstance(q, Ordinal):
        return render(q)
    if isinstance(q, int):
        return render(Ordinal.from_int(q))
    if isinstance(q, SetCode):
        return f"code(domain={q.domain},root={q.root},edges={len(q.edges)})"
    if isinstance(q, tuple):
        return "(" + ",".join(summarize_query(x) for x in q) + ")"
    if isinstance(q, HFSet):
        return render_hf(q)
    return str(q)


def summarize_response(v: Any) -> str:
    return summarize_query(v)


class Effectivizer:
    """A named deterministic oracle; ranked ones carry their hit set."""

    def __init__(self, name: str, answer_fn: Callable[[Any], Any],
                 hit_set: Optional[OrdinalSet] = None):
        self.name = name
        self._answer = answer_fn
        self.hit_set = hit_set

    def answer_value(self, query: Any) -> Any:
        return self._answer(query)

    def call(self, query: Any, ledger: Optional[QueryLedger],
             time: Ordinal) -> Tuple[Any, Ordinal]:
        """Answer one pointwise call; returns (value, elapsed order type)."""
        value = self.answer_value(query)
        if ledger is not None:
            ledger.append(SingleEntry(time=time, oracle=self.name,
                                      query=summarize_query(query),
                                      response=summarize_response(value),
                                      response_value=value))
        return value, ONE

    def ranked(self) -> OrdinalSet:
        if self.hit_set is None:
            raise NotRankedError(f"{self.name} does not expose a hit set")
        return self.hit_set


def answer(e: Effectivizer, query: Any, ledger: Optional[QueryLedger] = None,
           time: OrdinalLike = 0) -> Any:
    """One oracle call, optionally ledgered at the given time."""
    value, _ = e.call(query, ledger, _coerce(time))
    return value


def least_satisfying_above(e: Effectivizer, a: OrdinalLike) -> Optional[Ordinal]:
    return e.ranked().least_above(_coerce(a))


def greatest_satisfying_at_most(e: Effectivizer, a: OrdinalLike) -> Optional[Ordinal]:
    return e.ranked().greatest_at_most(_coerce(a))


def next_limit_of_satisfying_above(e: Effectivizer, a: OrdinalLike) -> Optional[Ordinal]:
    return e.ranked().next_limit_above(_coerce(a))


def _require(condition: bool, message: str):
    if not condition:
        raise OracleTypeError(message)


def make_effectivizer(name: str, structure: CardinalStructure = None,
                      level: int = None, rank: int = None,
                      script: Sequence = None,
                      hit_set: OrdinalSet = None) -> Effectivizer:
    """Build one of the catalog oracles over the given environment."""
    if name == DEC_CARD:
        _require(structure is not None, "DecCard needs a cardinal structure")

        def dec(q):
            return int(_u.is_cardinal(structure, _expect_ordinal(q)))

        return Effectivizer(DEC_CARD, dec, hit_set=CardinalClassSet(structure))
    if name == NEXT_CARD:
        _require(structure is not None, "NextCard needs a cardinal structure")
        return Effectivizer(NEXT_CARD,
                            lambda q: _u.next_card_of(structure, _expect_ordinal(q)))
    if name == ORD_CARD:
        _require(structure is not None, "OrdCard needs a cardinal structure")
        return Effectivizer(ORD_CARD,
                            lambda q: _u.card_of(structure, _expect_ordinal(q)))
    if name == POT:
        _require(structure is None and level is None, "Pot takes no environment")
        return Effectivizer(POT, lambda q: encode_hf(hf_powerset(decode_set(_expect_code(q)))))
    if name == POWER_CARD:
        _require(structure is None and level is None, "PowerCard takes no environment")
        return Effectivizer(POWER_CARD,
                            lambda q: Ordinal.from_int(
                                hf_card(hf_powerset(decode_set(_expect_code(q))))))
    if name == TRUTH:
        _require(level is not None and rank is not None,
                 "TruthSigma needs a level and a rank")
        return Effectivizer(f"{TRUTH}{level}", _truth_fn(level, rank))
    if name == SEP:
        _require(level is not None and rank is not None,
                 "SepSigma needs a level and a rank")
        return Effectivizer(f"{SEP}{level}", _sep_fn(level, rank))
    if name == SCRIPTED:
        _require(script is not None or hit_set is not None,
                 "Scripted needs a response script or a declared hit set")
        if script is not None:
            return ScriptedEffectivizer.from_pointwise(script)
        return Effectivizer(SCRIPTED, lambda q: int(hit_set.contains(_expect_ordinal(q))),
                            hit_set=hit_set)
    raise OracleTypeError(f"unknown effectivizer name {name!r}")


def _expect_ordinal(q) -> Ordinal:
    if isinstance(q, (Ordinal, int)):
        return _coerce(q)
    raise OracleTypeError(f"expected an ordinal query, got {q!r}")


def _expect_code(q) -> SetCode:
    if isinstance(q, SetCode):
        return q
    raise OracleTypeError(f"expected a set code query, got {q!r}")


def _truth_fn(level: int, rank: int):
    def truth(q):
        if not (isinstance(q, tuple) and len(q) == 2 and isinstance(q[0], int)
                and isinstance(q[1], tuple)):
            raise OracleTypeError(f"expected (index, params) query, got {q!r}")
        k, params = q
        f = formula_from_index(k)
        if classify_level(f) > level:
            return 0
        if f.num_params != len(params):
            return 0
        return eval_formula(f, TruthEnv(rank, params))

    return truth


def _sep_fn(level: int, rank: int):
    def sep(q):
        if not (isinstance(q, tuple) and len(q) == 3 and isinstance(q[1], int)):
            raise OracleTypeError(f"expected (code, index, param codes) query, got {q!r}")
        code_s, k, param_codes = q
        s = decode_set(_expect_code(code_s))
        params = tuple(decode_set(_expect_code(c)) for c in param_codes)
        f = formula_from_index(k)
        if f.num_params != len(params) + 1 or classify_level(f) > level:
            return encode_hf(_u.EMPTY_SET)
        kept = [x for x in s
                if eval_formula(f, TruthEnv(rank, (x,) + params)) == 1]
        return encode_hf(HFSet(kept))

    return sep


# -- scripted oracles and replay ---------------------------------------------


@dataclass(frozen=True)
class SingleSeg:
    """One recorded pointwise response (with the oracle name it came from)."""

    oracle: str
    value: Any


@dataclass(frozen=True)
class RunSeg:
    """One recorded scan: its window, charged order type, pattern, and the
    hit-set restriction needed to reproduce pointwise responses."""

    oracle: str
    from_query: Ordinal
    to_query: Ordinal
    order_type: Ordinal
    pattern: str
    hits: Optional[OrdinalSet]


Segment = Union[SingleSeg, RunSeg]


def extract_script(ledger: QueryLedger) -> Tuple[Segment, ...]:
    """The recorded response sequence of a run, in compressed form."""
    out: List[Segment] = []
    for e in ledger:
        if isinstance(e, SingleEntry):
            out.append(SingleSeg(oracle=e.oracle, value=e.response_value))
        else:
            out.append(RunSeg(oracle=e.oracle, from_query=e.from_query,
                              to_query=e.to_query, order_type=e.order_type,
                              pattern=e.pattern, hits=e.hits))
    return tuple(out)


class ScriptedEffectivizer(Effectivizer):
    """Answers from a recorded script instead of computing.

    Pointwise calls consume SingleSeg segments in order.  Scan statements
    consume one RunSeg each (validated against the scan's window) or, when
    the script is purely pointwise, simulate the scan probe by probe while
    finite segments last.  Exhaustion raises ScriptExhausted; a segment of
    the wrong shape raises ScriptMismatch.
    """

    def __init__(self, segments: Sequence[Segment]):
        super().__init__(SCRIPTED, answer_fn=None, hit_set=None)
        self.segments = tuple(segments)
        self.cursor = 0

    @staticmethod
    def from_pointwise(values: Sequence, oracle: str = SCRIPTED) -> "ScriptedEffectivizer":
        return ScriptedEffectivizer(tuple(SingleSeg(oracle=oracle, value=v)
                                          for v in values))

    def peek(self) -> Optional[Segment]:
        return self.segments[self.cursor] if self.cursor < len(self.segments) else None

    def _next_single(self) -> SingleSeg:
        seg = self.peek()
        if seg is None:
            raise ScriptExhausted("script exhausted")
        if not isinstance(seg, SingleSeg):
            raise ScriptMismatch("pointwise call hit a run segment")
        self.cursor += 1
        return seg

    def take_run(self) -> RunSeg:
        seg = self.peek()
        if seg is None:
            raise ScriptExhausted("script exhausted")
        if not isinstance(seg, RunSeg):
            raise ScriptMismatch("scan statement reached a pointwise segment")
        self.cursor += 1
        return seg

    def answer_value(self, query: Any) -> Any:
        return self._next_single().value

    def call(self, query, ledger, time):
        seg = self._next_single()
        if ledger is not None:
            ledger.append(SingleEntry(time=time, oracle=seg.oracle,
                                      query=summarize_query(query),
                                      response=summarize_response(seg.value),
                                      response_value=seg.value))
        return seg.value, ONE

    def exhausted(self) -> bool:
        return self.cursor >= len(self.segments)
