"""Catalog of oracle reductions with declared query-count bounds.

Each entry names what it computes (source), what it calls (oracle), a
symbolic bound on the ledger's total order type as a function of the input,
a program builder, and an independent reference for the expected output.
verify() runs a batch of instances and reports, per instance: correctness
against the reference, the charged order type, the evaluated bound, and
whether replaying the recorded responses reproduces the run.

compose() chains two entries when the outer's oracle is the inner's source:
every pointwise call the outer program makes is expanded into a full run of
the inner program, and only the inner's own oracle traffic is ledgered.
Scan statements need a ranked oracle and therefore cannot drive a composed
slot; the machine rejects that at run time.  The composed bound is the
ordinal product of the two bounds, checked in both operand orders since
ordinal multiplication does not commute.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from .ordcalc import (
    OMEGA,
    Ordinal,
    _coerce,
    add,
    left_sub,
    mul,
    render,
    successor,
)
from . import universe as u
from .universe import CardinalStructure, HFSet, NoSuchCardinalError, OutOfStructureError, SetCode
from .logic import TruthEnv, eval_formula, formula_from_index
from .oracles import (
    DEC_CARD,
    POT,
    TRUTH,
    Effectivizer,
    make_effectivizer,
    summarize_query,
)
from . import tam
from .tam import (
    Flag,
    GuessCheckLoop,
    Halt,
    If,
    INPUT,
    OracleCall,
    Program,
    ScanFirstHit,
    ScanFlagToggleUntil,
    ScanLastHitAtMost,
    SeparationScan,
    ComputableSubroutine,
    reg,
)

CATALOG_NAMES = (
    "nextcard_via_deccard",
    "ordcard_scan_naive",
    "ordcard_scan_improved",
    "ordcard_guesscheck",
    "flagtrick",
    "powercard_via_pot",
    "sep_via_truth",
)


class ReductionTypeError(TypeError):
    """Composition attempted between entries whose types do not chain."""


# -- symbolic bounds ---------------------------------------------------------


@dataclass(frozen=True)
class BoundForm:
    """Symbolic per-input bound on the ledger's total order type."""

    kind: str
    value: Optional[Ordinal] = None
    left: Optional["BoundForm"] = None
    right: Optional["BoundForm"] = None

    @staticmethod
    def const(c) -> "BoundForm":
        return BoundForm("const", value=_coerce(c))

    @staticmethod
    def input_itself() -> "BoundForm":
        return BoundForm("input")

    @staticmethod
    def succ_of_input() -> "BoundForm":
        return BoundForm("succ-of-input")

    @staticmethod
    def next_card_succ() -> "BoundForm":
        return BoundForm("next-card-succ")

    @staticmethod
    def finite() -> "BoundForm":
        return BoundForm("finite")

    @staticmethod
    def set_size() -> "BoundForm":
        return BoundForm("set-size")

    @staticmethod
    def next_limit_interval() -> "BoundForm":
        return BoundForm("next-limit-interval")

    @staticmethod
    def product(left: "BoundForm", right: "BoundForm") -> "BoundForm":
        return BoundForm("product", left=left, right=right)

    def evaluate(self, structure: Optional[CardinalStructure],
                 input_value) -> Optional[Ordinal]:
        """The bound's value at this input; None when the form is the bare
        finiteness promise or the input leaves the structure."""
        k = self.kind
        if k == "const":
            return self.value
        if k == "input":
            return _coerce(input_value)
        if k == "succ-of-input":
            return successor(input_value)
        if k == "next-card-succ":
            try:
                return successor(u.next_card_of(structure, input_value))
            except (NoSuchCardinalError, OutOfStructureError):
                return None
        if k == "finite":
            return None
        if k == "set-size":
            code = input_value[0]
            return Ordinal.from_int(len(u.code_elements(code)))
        if k == "next-limit-interval":
            try:
                lam = u.next_limit_of_cardinals_above(structure, input_value)
            except (NoSuchCardinalError, OutOfStructureError):
                return None
            return left_sub(input_value, lam)
        if k == "product":
            l = self.left.evaluate(structure, input_value)
            r = self.right.evaluate(structure, input_value)
            if l is None or r is None:
                return None
            return mul(l, r)
        raise ValueError(f"unknown bound form {k!r}")

    def within(self, total: Ordinal, structure, input_value) -> bool:
        if self.kind == "finite":
            return total < OMEGA
        if self.kind == "product":
            l = self.left.evaluate(structure, input_value)
            r = self.right.evaluate(structure, input_value)
            if l is None or r is None:
                return total < OMEGA
            return total <= mul(l, r) or total <= mul(r, l)
        bound = self.evaluate(structure, input_value)
        return bound is not None and total <= bound

    def product_note(self, total: Ordinal, structure, input_value) -> str:
        """For product forms: which operand order bounds the total."""
        if self.kind != "product":
            return ""
        l = self.left.evaluate(structure, input_value)
        r = self.right.evaluate(structure, input_value)
        if l is None or r is None:
            return "unbounded factor"
        fg, gf = mul(l, r), mul(r, l)
        holds = [order for order, prod in (("f*g", fg), ("g*f", gf))
                 if total <= prod]
        return "+".join(holds) if holds else "neither"

    def describe(self) -> str:
        k = self.kind
        if k == "const":
            return render(self.value)
        if k == "input":
            return "a"
        if k == "succ-of-input":
            return "a+1"
        if k == "next-card-succ":
            return "nextcard(a)+1"
        if k == "finite":
            return "finite"
        if k == "set-size":
            return "|S|"
        if k == "next-limit-interval":
            return "leftsub(a, next limit of cardinals)"
        if k == "product":
            return f"({self.left.describe()})*({self.right.describe()})"
        raise ValueError(k)


# -- approximators -----------------------------------------------------------


@dataclass(frozen=True)
class Approximator:
    """Pull-based guess source.  The distinct values it emits must strictly
    decrease, and any emitted cardinal must be the input's cardinality."""

    name: str
    chain_for: Callable[[Ordinal], Sequence[Ordinal]]

    def __call__(self, input_value, parameter):
        return iter(self.chain_for(input_value))


def direct_descent(structure: CardinalStructure) -> Approximator:
    """Two-step default: the input itself, then its cardinality."""

    def chain(a):
        a = _coerce(a)
        c = u.card_of(structure, a)
        return (a,) if c == a else (a, c)

    return Approximator("direct-descent", chain)


# -- catalog entries ---------------------------------------------------------


@dataclass(frozen=True)
class ReductionSpec:
    name: str
    source: str
    oracle: str
    bound: BoundForm
    make_program: Callable[[], Program]
    make_bindings: Callable[[Optional[CardinalStructure]], Dict[str, Effectivizer]]
    reference: Callable[[Optional[CardinalStructure], Any], Any]
    composite: bool = False   # composed runs cannot be replayed pointwise


def program_nextcard_via_deccard() -> Program:
    return Program("nextcard_via_deccard", (
        ScanFirstHit(slot="deccard", above=INPUT, register="r"),
        Halt(reg("r")),
    ))


def program_ordcard_scan(improved: bool) -> Program:
    if not improved:
        return Program("ordcard_scan_naive", (
            ScanLastHitAtMost(slot="deccard", bound=INPUT, register="r"),
            Halt(reg("r")),
        ))
    return Program("ordcard_scan_improved", (
        If(("is-finite", INPUT),
           then_branch=(Halt(INPUT),),
           else_branch=(
               ScanLastHitAtMost(slot="deccard", bound=INPUT, register="r",
                                 charge_closed=False),
               Halt(reg("r")),
           )),
    ))


def program_ordcard_guesscheck(approximator: Approximator) -> Program:
    return Program("ordcard_guesscheck", (
        GuessCheckLoop(slot="deccard", guesses=approximator, register="r"),
        Halt(reg("r")),
    ))


def program_flagtrick() -> Program:
    return Program("flagtrick", (
        ScanFlagToggleUntil(slot="deccard", start=INPUT,
                            flags=(Flag("steady", 0), Flag("armed", 1)),
                            register="r"),
        Halt(reg("r")),
    ))


def _is_strict_total_order(edges, n: int) -> bool:
    for i in range(n):
        if (i, i) in edges:
            return False
        for j in range(i + 1, n):
            if ((i, j) in edges) == ((j, i) in edges):
                return False
    for i, j in edges:
        for k in range(n):
            if (j, k) in edges and (i, k) not in edges:
                return False
    return True


def _minimal_well_order_length(power_code: SetCode, relations_code: SetCode) -> Ordinal:
    """Scan every relation for well-orderings of the power set and return the
    shortest length found.  Pairs are mapped to index edges once up front so
    the scan runs on small integer sets."""
    elements = list(u.decode_set(power_code))
    n = len(elements)
    pair_of = {u.kuratowski(a, b): (i, j)
               for i, a in enumerate(elements)
               for j, b in enumerate(elements)}
    best = None
    for relation in u.decode_set(relations_code).members:
        edges = set()
        for member in relation.members:
            edge = pair_of.get(member)
            if edge is None:
                break
            edges.add(edge)
        else:
            if _is_strict_total_order(edges, n):
                # finite strict total orders are exactly the well-orderings
                best = n if best is None else min(best, n)
    if best is None:
        raise ValueError("no well-ordering among the relations")
    return Ordinal.from_int(best)


def _square_code(power_code: SetCode) -> SetCode:
    s = u.decode_set(power_code)
    return u.encode_hf(u.hf_product(s, s))


def _count_power(power_code: SetCode, _unused) -> Ordinal:
    return Ordinal.from_int(u.hf_card(u.decode_set(power_code)))


def program_powercard_via_pot(count_only: bool = False) -> Program:
    """Two oracle calls bracketing free host work.  The full mode points the
    second call at the square of the power set, so every binary relation on
    it, well-orderings included, comes back; the count-only mode keeps the
    call count but aims the second call at the power set itself, since the
    square of anything bigger overflows the host powerset cap."""
    if count_only:
        return Program("powercard_via_pot_count", (
            OracleCall(slot="pot", arg=INPUT, register="pow1"),
            OracleCall(slot="pot", arg=reg("pow1"), register="pow2"),
            ComputableSubroutine("count-power", _count_power,
                                 (reg("pow1"), reg("pow2")), "n"),
            Halt(reg("n")),
        ))
    return Program("powercard_via_pot", (
        OracleCall(slot="pot", arg=INPUT, register="pow1"),
        ComputableSubroutine("square-code", _square_code, (reg("pow1"),), "sq"),
        OracleCall(slot="pot", arg=reg("sq"), register="rels"),
        ComputableSubroutine("minimal-well-order-length",
                             _minimal_well_order_length,
                             (reg("pow1"), reg("rels")), "n"),
        Halt(reg("n")),
    ))


def program_sep_via_truth() -> Program:
    return Program("sep_via_truth", (
        SeparationScan(slot="truth", register="r"),
        Halt(reg("r")),
    ))


# -- references --------------------------------------------------------------


def _ref_nextcard(structure, a):
    try:
        return u.next_card_of(structure, a)
    except (NoSuchCardinalError, OutOfStructureError):
        return None


def _ref_ordcard(structure, a):
    try:
        return u.card_of(structure, a)
    except OutOfStructureError:
        return None


def _ref_next_limit(structure, a):
    try:
        return u.next_limit_of_cardinals_above(structure, a)
    except (NoSuchCardinalError, OutOfStructureError):
        return None


def _ref_powercard(_structure, code):
    return Ordinal.from_int(2 ** u.hf_card(u.decode_set(code)))


def _brute_separation(rank: int):
    def ref(_structure, triple):
        code, k, param_codes = triple
        s = u.decode_set(code)
        params = tuple(u.decode_set(c) for c in param_codes)
        f = formula_from_index(k)
        if f.num_params != len(params) + 1:
            return u.encode_hf(u.EMPTY_SET)
        kept = [x for x in s
                if eval_formula(f, TruthEnv(rank, (x,) + params)) == 1]
        return u.encode_hf(HFSet(kept))

    return ref


# -- catalog -----------------------------------------------------------------


def catalog(name: str, approximator: Optional[Approximator] = None,
            count_only: bool = False, level: int = 2,
            rank: int = 3) -> ReductionSpec:
    """Build a catalog entry by its stable name."""
    if name == "nextcard_via_deccard":
        return ReductionSpec(
            name=name, source="NextCard", oracle="DecCard",
            bound=BoundForm.next_card_succ(),
            make_program=program_nextcard_via_deccard,
            make_bindings=lambda cs: {"deccard": make_effectivizer(DEC_CARD, structure=cs)},
            reference=_ref_nextcard)
    if name == "ordcard_scan_naive":
        return ReductionSpec(
            name=name, source="OrdCard", oracle="DecCard",
            bound=BoundForm.succ_of_input(),
            make_program=lambda: program_ordcard_scan(improved=False),
            make_bindings=lambda cs: {"deccard": make_effectivizer(DEC_CARD, structure=cs)},
            reference=_ref_ordcard)
    if name == "ordcard_scan_improved":
        return ReductionSpec(
            name=name, source="OrdCard", oracle="DecCard",
            bound=BoundForm.input_itself(),
            make_program=lambda: program_ordcard_scan(improved=True),
            make_bindings=lambda cs: {"deccard": make_effectivizer(DEC_CARD, structure=cs)},
            reference=_ref_ordcard)
    if name == "ordcard_guesscheck":
        if approximator is not None:
            return ReductionSpec(
                name=name, source="OrdCard", oracle="DecCard",
                bound=BoundForm.finite(),
                make_program=lambda: program_ordcard_guesscheck(approximator),
                make_bindings=lambda cs: {"deccard": make_effectivizer(DEC_CARD, structure=cs)},
                reference=_ref_ordcard)
        # default approximator needs the structure, known only at binding time
        cell: Dict[str, Approximator] = {}
        lazy = Approximator("direct-descent",
                            lambda a: cell["approx"].chain_for(a))

        def make_default_bindings(cs):
            cell["approx"] = direct_descent(cs)
            return {"deccard": make_effectivizer(DEC_CARD, structure=cs)}

        return ReductionSpec(
            name=name, source="OrdCard", oracle="DecCard",
            bound=BoundForm.finite(),
            make_program=lambda: program_ordcard_guesscheck(lazy),
            make_bindings=make_default_bindings, reference=_ref_ordcard)
    if name == "flagtrick":
        return ReductionSpec(
            name=name, source="NextLimitOfCardinals", oracle="DecCard",
            bound=BoundForm.next_limit_interval(),
            make_program=program_flagtrick,
            make_bindings=lambda cs: {"deccard": make_effectivizer(DEC_CARD, structure=cs)},
            reference=_ref_next_limit)
    if name == "powercard_via_pot":
        return ReductionSpec(
            name=name, source="PowerCard", oracle="Pot",
            bound=BoundForm.const(2),
            make_program=lambda: program_powercard_via_pot(count_only),
            make_bindings=lambda cs: {"pot": make_effectivizer(POT)},
            reference=_ref_powercard)
    if name == "sep_via_truth":
        return ReductionSpec(
            name=name, source="Separation", oracle=f"{TRUTH}{level}",
            bound=BoundForm.set_size(),
            make_program=program_sep_via_truth,
            make_bindings=lambda cs, lv=level, rk=rank: {
                "truth": make_effectivizer(TRUTH, level=lv, rank=rk)},
            reference=_brute_separation(rank))
    raise ValueError(f"unknown reduction name {name!r}")


def delegate_spec(source: str, oracle_name: str,
                  make_oracle: Callable[[Optional[CardinalStructure]], Effectivizer],
                  reference: Callable, calls: int = 1) -> ReductionSpec:
    """A straight-line entry that answers by making `calls` pointwise calls
    and returning the last response; the one-call case is the unit reduction."""
    body = [OracleCall(slot="o", arg=INPUT, register="r")
            for _ in range(calls)]
    body.append(Halt(reg("r")))
    return ReductionSpec(
        name=f"{source.lower()}_delegate_{calls}call",
        source=source, oracle=oracle_name,
        bound=BoundForm.const(calls),
        make_program=lambda: Program(f"{source.lower()}-delegate", tuple(body)),
        make_bindings=lambda cs: {"o": make_oracle(cs)},
        reference=reference)


# -- verification ------------------------------------------------------------


@dataclass
class Row:
    input_text: str
    status: str
    output_text: Optional[str]
    expected_text: Optional[str]
    correct: bool
    order_type: str
    bound_text: str
    within: bool
    replay_ok: Optional[bool]
    product_note: str = ""

    @property
    def ok(self) -> bool:
        return (self.correct and self.within
                and self.replay_ok is not False)

    def to_json(self) -> dict:
        return {"input": self.input_text, "status": self.status,
                "output": self.output_text, "expected": self.expected_text,
                "correct": self.correct, "order_type": self.order_type,
                "bound": self.bound_text, "within_bound": self.within,
                "replay_ok": self.replay_ok,
                **({"product_note": self.product_note} if self.product_note else {})}


@dataclass
class Report:
    reduction: str
    structure: str
    bound: str
    rows: List[Row] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json(self) -> dict:
        return {"reduction": self.reduction, "structure": self.structure,
                "bound": self.bound, "passed": self.passed,
                "instances": [r.to_json() for r in self.rows]}

    def render_table(self) -> str:
        headers = ("input", "status", "output", "expected", "order type",
                   "bound", "ok")
        body = [(r.input_text, r.status, r.output_text or "-",
                 r.expected_text or "-", r.order_type, r.bound_text,
                 "pass" if r.ok else "FAIL") for r in self.rows]
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
                  for i, h in enumerate(headers)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        verdict = "all checks passed" if self.passed else "FAILURES present"
        lines.append(f"{self.reduction} over {self.structure}: {verdict}")
        return "\n".join(lines)


def _text(value) -> Optional[str]:
    return None if value is None else summarize_query(value)


def verify(spec: ReductionSpec, structure: Optional[CardinalStructure],
           instances: Sequence, budget: int = tam.DEFAULT_BUDGET,
           bound_override: Optional[BoundForm] = None) -> Report:
    """Run every instance, check output, bound, and replayability."""
    bound = bound_override if bound_override is not None else spec.bound
    report = Report(reduction=spec.name,
                    structure=structure.kind if structure else "-",
                    bound=bound.describe())
    for instance in instances:
        program = spec.make_program()
        bindings = spec.make_bindings(structure)
        res = tam.run(program, instance, bindings, budget)
        expected = spec.reference(structure, instance)
        correct = (res.halted and res.output == expected) or \
                  (not res.halted and expected is None)
        total = res.ledger.total_order_type()
        within = bound.within(total, structure, instance) if res.halted else True
        if spec.composite or not res.halted:
            replay_ok = None
        else:
            replay_ok = tam.replay(program, instance, res, budget).same_as(res)
        bound_value = bound.evaluate(structure, instance)
        report.rows.append(Row(
            input_text=summarize_query(instance),
            status=res.status,
            output_text=_text(res.output),
            expected_text=_text(expected),
            correct=correct,
            order_type=render(total),
            bound_text=bound.describe() if bound_value is None
            else render(bound_value),
            within=within,
            replay_ok=replay_ok,
            product_note=bound.product_note(total, structure, instance)))
    return report


# -- composition -------------------------------------------------------------


class CompositeEffectivizer(Effectivizer):
    """Answers each pointwise call by running an inner reduction program,
    splicing the inner oracle traffic, re-timed, into the caller's ledger."""

    def __init__(self, name: str, inner_program_factory, inner_bindings,
                 budget: int = tam.DEFAULT_BUDGET):
        super().__init__(name, answer_fn=None, hit_set=None)
        self._factory = inner_program_factory
        self._bindings = inner_bindings
        self._budget = budget

    def _run_inner(self, query) -> tam.RunResult:
        res = tam.run(self._factory(), query, self._bindings, self._budget)
        if not res.halted:
            raise RuntimeError(
                f"inner reduction {self.name} did not halt ({res.status})")
        return res

    def answer_value(self, query):
        return self._run_inner(query).output

    def call(self, query, ledger, time):
        res = self._run_inner(query)
        if ledger is not None:
            for entry in res.ledger:
                ledger.append(dataclasses.replace(entry,
                                                  time=add(time, entry.time)))
        return res.output, res.ledger.total_order_type()


def compose(outer: ReductionSpec, inner: ReductionSpec,
            budget: int = tam.DEFAULT_BUDGET) -> ReductionSpec:
    """Chain two entries; the composed ledger carries only the inner oracle's
    calls and the composed bound is checked as a product in both orders."""
    if outer.oracle != inner.source:
        raise ReductionTypeError(
            f"{outer.name} calls {outer.oracle} but {inner.name} computes {inner.source}")

    def make_bindings(structure):
        inner_bindings = inner.make_bindings(structure)
        composite = CompositeEffectivizer(
            inner.name, inner.make_program, inner_bindings, budget)
        program = outer.make_program()
        return {slot: composite for slot in program.slots()}

    return ReductionSpec(
        name=f"{outer.name}+{inner.name}",
        source=outer.source,
        oracle=inner.oracle,
        bound=BoundForm.product(outer.bound, inner.bound),
        make_program=outer.make_program,
        make_bindings=make_bindings,
        reference=outer.reference,
        composite=True)
