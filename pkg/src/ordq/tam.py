"""A small transfinite machine evaluated in closed form.

Programs are flat statement lists over named registers.  Plain computation
between oracle calls is free: it costs no time and leaves no ledger trace.
The clock advances only when an oracle is consulted, one step per answered
call, so a halting run's clock reading equals its ledger's total order type.

The scan statements are where the transfinite content lives.  Instead of
stepping through limit stages, each scan is resolved against the bound
oracle's ranked hit set:

  first-hit       probes every ordinal strictly above an anchor until the
                  first positive answer; charged the interval's order type.
  last-hit        sweeps all ordinals up to a bound and keeps the greatest
                  positive position.
  flag-toggle     toggles a bank of flags at every positive answer and stops
                  at the first stage where all flags read 0.  At limit
                  stages a flag reads its lim-inf: 0 whenever toggles are
                  cofinal, which is what ends the scan at a limit of hits.
  guess-check     pulls strictly decreasing guesses from a source and makes
                  one pointwise call per distinct guess until a positive
                  answer.
  member-filter   one pointwise truth call per element of a coded set,
                  keeping the satisfying elements.

A scan with no satisfying point diverges; if the oracle declares a world
boundary, the fruitless sweep up to it is still ledgered before the run is
reported as divergent.

Budgets cap interpreter events (statement executions plus per-guess and
per-probe micro-steps), not ordinal time: a scan of length w^2 is one event.

run_scripted replays a program against recorded responses instead of live
oracles; replaying a halting run's own extracted script reproduces the run
exactly, ledger included.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

from .ordcalc import ZERO, Ordinal, _coerce, add, left_sub, successor
from .logic import formula_from_index
from .universe import EMPTY_SET, HFSet, SetCode, code_elements, decode_element, decode_set, encode_hf
from .oracles import (
    PATTERN_ALL_ZERO,
    PATTERN_FINAL_ONE,
    PATTERN_ORACLE_HITS,
    Effectivizer,
    QueryLedger,
    RunEntry,
    RunSeg,
    ScriptExhausted,
    ScriptedEffectivizer,
    SingleSeg,
    extract_script,
    flag_value_after,
)

__all__ = [
    "HALTED", "DIVERGED", "BUDGET_EXCEEDED", "SCRIPT_EXHAUSTED",
    "DEFAULT_BUDGET", "ProgramError", "ApproximatorContractError",
    "const", "INPUT", "PARAM", "reg", "succ", "Flag",
    "Assign", "OracleCall", "ScanFirstHit", "ScanLastHitAtMost",
    "ScanFlagToggleUntil", "GuessCheckLoop", "ComputableSubroutine",
    "SeparationScan", "If", "Halt", "Program", "RunResult",
    "run", "run_scripted", "replay", "flag_value_after",
]

HALTED = "halted"
DIVERGED = "diverged"
BUDGET_EXCEEDED = "budget-exceeded"
SCRIPT_EXHAUSTED = "script-exhausted"

DEFAULT_BUDGET = 10_000


class ProgramError(RuntimeError):
    """Ill-formed program or run setup: unbound slot, unset register,
    missing halt, malformed input shape."""


class ApproximatorContractError(RuntimeError):
    """A guess source emitted a non-decreasing distinct value."""


# -- expressions -------------------------------------------------------------
#
# Expressions are tagged tuples:
#   ("const", value) ("input",) ("param",) ("reg", name) ("succ", expr)


def const(value) -> tuple:
    return ("const", value)


INPUT = ("input",)
PARAM = ("param",)


def reg(name: str) -> tuple:
    return ("reg", name)


def succ(expr: tuple) -> tuple:
    return ("succ", expr)


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Flag:
    name: str
    initial: int

    def __post_init__(self):
        if self.initial not in (0, 1):
            raise ProgramError("flags are bits")


@dataclass(frozen=True)
class Assign:
    register: str
    expr: tuple


@dataclass(frozen=True)
class OracleCall:
    slot: str
    arg: tuple
    register: str


@dataclass(frozen=True)
class ScanFirstHit:
    """Least positive position strictly above the anchor."""

    slot: str
    above: tuple
    register: str


@dataclass(frozen=True)
class ScanLastHitAtMost:
    """Greatest positive position at most the bound.  The naive form is
    charged bound+1 (the closed sweep); the declared form is charged just
    the bound."""

    slot: str
    bound: tuple
    register: str
    charge_closed: bool = True


@dataclass(frozen=True)
class ScanFlagToggleUntil:
    """Toggle all flags at every hit strictly above the start; stop at the
    first stage where every flag reads 0."""

    slot: str
    start: tuple
    flags: Tuple[Flag, ...]
    register: str


@dataclass(frozen=True)
class GuessCheckLoop:
    """guesses(input, param) yields candidates; consecutive repeats collapse
    and the distinct values must strictly decrease."""

    slot: str
    guesses: Callable[[Ordinal, Ordinal], Any]
    register: str


@dataclass(frozen=True)
class ComputableSubroutine:
    name: str
    fn: Callable
    args: Tuple[tuple, ...]
    register: str


@dataclass(frozen=True)
class SeparationScan:
    """Input (code(S), formula index, coded side parameters): one truth call
    per element of S, output the code of the satisfying subset.  A formula
    whose parameter count does not fit gets the empty set with zero calls."""

    slot: str
    register: str


@dataclass(frozen=True)
class If:
    condition: tuple            # ("is-finite", expr)
    then_branch: Tuple[Any, ...]
    else_branch: Tuple[Any, ...] = ()


@dataclass(frozen=True)
class Halt:
    output: tuple


Statement = Union[Assign, OracleCall, ScanFirstHit, ScanLastHitAtMost,
                  ScanFlagToggleUntil, GuessCheckLoop, ComputableSubroutine,
                  SeparationScan, If, Halt]


@dataclass(frozen=True)
class Program:
    name: str
    body: Tuple[Statement, ...]
    parameter: Ordinal = ZERO

    def slots(self) -> Tuple[str, ...]:
        found: Dict[str, None] = {}

        def walk(statements):
            for st in statements:
                if isinstance(st, If):
                    walk(st.then_branch)
                    walk(st.else_branch)
                elif hasattr(st, "slot"):
                    found.setdefault(st.slot)

        walk(self.body)
        return tuple(found)


@dataclass
class RunResult:
    status: str
    output: Any
    halt_time: Optional[Ordinal]
    ledger: QueryLedger

    @property
    def halted(self) -> bool:
        return self.status == HALTED

    def same_as(self, other: "RunResult") -> bool:
        return (self.status == other.status and self.output == other.output
                and self.halt_time == other.halt_time
                and self.ledger.to_json() == other.ledger.to_json())


# -- interpreter -------------------------------------------------------------


class _Halted(Exception):
    def __init__(self, output):
        self.output = output


class _Diverged(Exception):
    pass


class _BudgetExceeded(Exception):
    pass


class _ScriptOut(Exception):
    pass


class _Machine:
    def __init__(self, program: Program, input_value, bindings, budget: int):
        if budget <= 0:
            raise ProgramError("budget must be positive")
        for slot in program.slots():
            if slot not in bindings:
                raise ProgramError(f"oracle slot {slot!r} is unbound")
        self.program = program
        self.input = input_value
        self.bindings = bindings
        self.budget = budget
        self.events = 0
        self.time: Ordinal = ZERO
        self.registers: Dict[str, Any] = {}
        self.ledger = QueryLedger()

    # -- plumbing ----------------------------------------------------------

    def _tick(self):
        self.events += 1
        if self.events > self.budget:
            raise _BudgetExceeded

    def _oracle(self, slot: str) -> Effectivizer:
        return self.bindings[slot]

    def _eval(self, expr: tuple):
        tag = expr[0]
        if tag == "const":
            return expr[1]
        if tag == "input":
            return self.input
        if tag == "param":
            return self.program.parameter
        if tag == "reg":
            if expr[1] not in self.registers:
                raise ProgramError(f"register {expr[1]!r} read before assignment")
            return self.registers[expr[1]]
        if tag == "succ":
            return successor(self._ord(self._eval(expr[1])))
        raise ProgramError(f"unknown expression tag {tag!r}")

    def _ord(self, value) -> Ordinal:
        if isinstance(value, (Ordinal, int)):
            return _coerce(value)
        raise ProgramError(f"expected an ordinal, got {value!r}")

    def _call(self, oracle: Effectivizer, query) -> Any:
        value, elapsed = oracle.call(query, self.ledger, self.time)
        self.time = add(self.time, elapsed)
        return value

    def _append_run(self, oracle_name: str, from_q: Ordinal, to_q: Ordinal,
                    order_type: Ordinal, pattern: str, hits=None):
        if order_type.is_zero():
            return
        self.ledger.append(RunEntry(time=self.time, oracle=oracle_name,
                                    from_query=from_q, to_query=to_q,
                                    order_type=order_type, pattern=pattern,
                                    hits=hits))
        self.time = add(self.time, order_type)

    def _take_replay_run(self, oracle: ScriptedEffectivizer,
                         from_q: Ordinal) -> RunSeg:
        seg = oracle.take_run()
        if seg.from_query != from_q:
            raise ProgramError(
                f"recorded scan starts at {seg.from_query}, not {from_q}")
        return seg

    def _sweep_and_diverge(self, oracle_name: str, hits, start: Ordinal,
                           pattern: str):
        horizon = hits.scan_horizon()
        if horizon is not None and horizon > start:
            self._append_run(oracle_name, start, horizon,
                             left_sub(start, horizon), pattern,
                             hits=hits if pattern == PATTERN_ORACLE_HITS else None)
        raise _Diverged

    # -- statements ----------------------------------------------------------

    def _execute(self, statements):
        for st in statements:
            self._tick()
            handler = self._HANDLERS[type(st)]
            handler(self, st)

    def _do_assign(self, st: Assign):
        self.registers[st.register] = self._eval(st.expr)

    def _do_halt(self, st: Halt):
        raise _Halted(self._eval(st.output))

    def _do_if(self, st: If):
        tag, expr = st.condition
        if tag != "is-finite":
            raise ProgramError(f"unknown condition {tag!r}")
        value = self._ord(self._eval(expr))
        branch = st.then_branch if value.is_finite() else st.else_branch
        self._execute(branch)

    def _do_subroutine(self, st: ComputableSubroutine):
        values = [self._eval(a) for a in st.args]
        self.registers[st.register] = st.fn(*values)

    def _do_oracle_call(self, st: OracleCall):
        self.registers[st.register] = self._call(self._oracle(st.slot),
                                                 self._eval(st.arg))

    def _do_first_hit(self, st: ScanFirstHit):
        anchor = self._ord(self._eval(st.above))
        oracle = self._oracle(st.slot)
        if isinstance(oracle, ScriptedEffectivizer):
            result = self._first_hit_scripted(oracle, anchor)
        else:
            hits = oracle.ranked()
            result = hits.least_above(anchor)
            if result is None:
                self._sweep_and_diverge(oracle.name, hits, anchor,
                                        PATTERN_ALL_ZERO)
            self._append_run(oracle.name, anchor, result,
                             left_sub(anchor, result), PATTERN_FINAL_ONE)
        self.registers[st.register] = result

    def _first_hit_scripted(self, oracle: ScriptedEffectivizer,
                            anchor: Ordinal) -> Ordinal:
        seg = oracle.peek()
        if seg is None:
            raise _ScriptOut
        if isinstance(seg, RunSeg):
            seg = self._take_replay_run(oracle, anchor)
            if seg.pattern == PATTERN_ALL_ZERO:
                self._append_run(seg.oracle, seg.from_query, seg.to_query,
                                 seg.order_type, seg.pattern)
                raise _Diverged
            self._append_run(seg.oracle, seg.from_query, seg.to_query,
                             seg.order_type, seg.pattern)
            return seg.to_query
        # pointwise script: probe upward one recorded bit at a time
        probe = successor(anchor)
        name = seg.oracle
        while True:
            self._tick()
            bit = oracle.answer_value(probe)
            if bit == 1:
                self._append_run(name, anchor, probe, left_sub(anchor, probe),
                                 PATTERN_FINAL_ONE)
                return probe
            probe = successor(probe)

    def _do_last_hit(self, st: ScanLastHitAtMost):
        bound = self._ord(self._eval(st.bound))
        oracle = self._oracle(st.slot)
        charged = successor(bound) if st.charge_closed else bound
        if isinstance(oracle, ScriptedEffectivizer):
            seg = oracle.peek()
            if seg is None:
                raise _ScriptOut
            if isinstance(seg, SingleSeg):
                result = self._last_hit_pointwise(oracle, bound, charged)
                self.registers[st.register] = result
                return
            seg = self._take_replay_run(oracle, ZERO)
            hits, name = seg.hits, seg.oracle
        else:
            hits, name = oracle.ranked(), oracle.name
        result = hits.greatest_at_most(bound)
        self._append_run(name, ZERO, bound, charged, PATTERN_ORACLE_HITS,
                         hits=hits)
        if result is None:
            raise _Diverged
        self.registers[st.register] = result

    def _last_hit_pointwise(self, oracle: ScriptedEffectivizer,
                            bound: Ordinal, charged: Ordinal) -> Ordinal:
        if not bound.is_finite():
            raise _ScriptOut  # a pointwise script cannot feed a limit sweep
        name, best, probe = None, None, ZERO
        while probe <= bound:
            self._tick()
            seg = oracle.peek()
            if seg is None or not isinstance(seg, SingleSeg):
                raise _ScriptOut
            name = seg.oracle
            if oracle.answer_value(probe) == 1:
                best = probe
            probe = successor(probe)
        self._append_run(name, ZERO, bound, charged, PATTERN_ORACLE_HITS)
        if best is None:
            raise _Diverged
        return best

    def _do_flag_scan(self, st: ScanFlagToggleUntil):
        start = self._ord(self._eval(st.start))
        oracle = self._oracle(st.slot)
        initials = tuple(f.initial for f in st.flags)
        if not st.flags:
            raise ProgramError("flag scan needs at least one flag")
        if isinstance(oracle, ScriptedEffectivizer):
            exit_point = self._flag_scan_scripted(oracle, start, initials)
            self.registers[st.register] = exit_point
            return
        hits, name = oracle.ranked(), oracle.name
        exit_point = self._flag_exit_point(hits, name, start, initials)
        self.registers[st.register] = exit_point

    def _flag_exit_point(self, hits, name: str, start: Ordinal,
                         initials: Tuple[int, ...]) -> Ordinal:
        if all(v == 0 for v in initials):
            return start                             # nothing to wait for
        if all(v == 1 for v in initials):
            h = hits.least_above(start)              # one toggle zeroes all
            if h is None:
                self._sweep_and_diverge(name, hits, start, PATTERN_ALL_ZERO)
            self._append_run(name, start, h, left_sub(start, h),
                             PATTERN_FINAL_ONE)
            return h
        # mixed bank: toggles alone never zero it; only a limit of hits,
        # where every flag reads its lim-inf 0, can end the scan
        lam = hits.next_limit_above(start)
        if lam is None:
            self._sweep_and_diverge(name, hits, start, PATTERN_ORACLE_HITS)
        self._append_run(name, start, lam, left_sub(start, lam),
                         PATTERN_ORACLE_HITS, hits=hits)
        return lam

    def _flag_scan_scripted(self, oracle: ScriptedEffectivizer,
                            start: Ordinal, initials: Tuple[int, ...]) -> Ordinal:
        if all(v == 0 for v in initials):
            return start
        seg = oracle.peek()
        if seg is None:
            raise _ScriptOut
        if isinstance(seg, RunSeg):
            seg = self._take_replay_run(oracle, start)
            if seg.pattern == PATTERN_ALL_ZERO:      # a recorded fruitless sweep
                self._append_run(seg.oracle, seg.from_query, seg.to_query,
                                 seg.order_type, seg.pattern)
                raise _Diverged
            return self._flag_exit_point(seg.hits if seg.hits is not None
                                         else _RecordedFinalHit(seg),
                                         seg.oracle, start, initials)
        # pointwise: only an all-ones bank can exit within a finite prefix
        state = list(initials)
        probe, name = successor(start), seg.oracle
        while True:
            self._tick()
            bit = oracle.answer_value(probe)
            if bit == 1:
                state = [1 - v for v in state]
            if all(v == 0 for v in state):
                self._append_run(name, start, probe, left_sub(start, probe),
                                 PATTERN_FINAL_ONE)
                return probe
            probe = successor(probe)

    def _do_guess_check(self, st: GuessCheckLoop):
        oracle = self._oracle(st.slot)
        source = st.guesses(self.input, self.program.parameter)
        last = None
        for raw in source:
            value = self._ord(raw)
            if last is not None and value == last:
                continue
            if last is not None and value > last:
                raise ApproximatorContractError(
                    f"guess {value} does not decrease below {last}")
            last = value
            self._tick()
            if self._call(oracle, value) == 1:
                self.registers[st.register] = value
                return
        raise _Diverged

    def _do_separation(self, st: SeparationScan):
        shape = self.input
        if not (isinstance(shape, tuple) and len(shape) == 3
                and isinstance(shape[0], SetCode) and isinstance(shape[1], int)
                and isinstance(shape[2], tuple)):
            raise ProgramError("input must be (set code, formula index, parameter codes)")
        code, k, param_codes = shape
        params = tuple(decode_set(c) for c in param_codes)
        if formula_from_index(k).num_params != len(params) + 1:
            self.registers[st.register] = encode_hf(EMPTY_SET)
            return
        oracle = self._oracle(st.slot)
        kept = []
        for node in code_elements(code):
            self._tick()
            x = decode_element(code, node)
            if self._call(oracle, (k, (x,) + params)) == 1:
                kept.append(x)
        self.registers[st.register] = encode_hf(HFSet(kept))

    _HANDLERS = {
        Assign: _do_assign,
        Halt: _do_halt,
        If: _do_if,
        ComputableSubroutine: _do_subroutine,
        OracleCall: _do_oracle_call,
        ScanFirstHit: _do_first_hit,
        ScanLastHitAtMost: _do_last_hit,
        ScanFlagToggleUntil: _do_flag_scan,
        GuessCheckLoop: _do_guess_check,
        SeparationScan: _do_separation,
    }


class _RecordedFinalHit:
    """Minimal hit-set view of a final-one run segment: its one hit is the
    recorded endpoint."""

    def __init__(self, seg: RunSeg):
        self.seg = seg

    def least_above(self, a):
        return self.seg.to_query if self.seg.to_query > a else None

    def next_limit_above(self, a):
        return None

    def scan_horizon(self):
        return None


def _run_machine(m: _Machine) -> RunResult:
    try:
        m._execute(m.program.body)
    except _Halted as h:
        return RunResult(HALTED, h.output, m.time, m.ledger)
    except _Diverged:
        return RunResult(DIVERGED, None, None, m.ledger)
    except _BudgetExceeded:
        return RunResult(BUDGET_EXCEEDED, None, None, m.ledger)
    except (_ScriptOut, ScriptExhausted):
        return RunResult(SCRIPT_EXHAUSTED, None, None, m.ledger)
    raise ProgramError(f"program {m.program.name} ended without halting")


def run(program: Program, input_value, bindings: Dict[str, Effectivizer],
        budget: int = DEFAULT_BUDGET) -> RunResult:
    """Evaluate a program against live oracles."""
    return _run_machine(_Machine(program, input_value, bindings, budget))


def run_scripted(program: Program, input_value,
                 script: Sequence, budget: int = DEFAULT_BUDGET) -> RunResult:
    """Evaluate with every oracle slot answered from one recorded script.

    The script is either a plain sequence of response values (consumed one
    per pointwise call, with scans simulated probe by probe) or a sequence
    of recorded segments as extracted from a previous run's ledger."""
    if script and isinstance(script[0], (SingleSeg, RunSeg)):
        oracle = ScriptedEffectivizer(tuple(script))
    else:
        oracle = ScriptedEffectivizer.from_pointwise(tuple(script))
    bindings = {slot: oracle for slot in program.slots()}
    return _run_machine(_Machine(program, input_value, bindings, budget))


def replay(program: Program, input_value, result: RunResult,
           budget: int = DEFAULT_BUDGET) -> RunResult:
    """Re-run a program against the response script of a previous result."""
    return run_scripted(program, input_value, extract_script(result.ledger),
                        budget)
