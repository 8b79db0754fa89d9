"""Machine semantics: closed-form scans vs event-level reference, scripted
replay, budgets, and the statement catalog plumbing."""

import pytest

from ordq import universe as u
from ordq.logic import formula_index, parse_formula
from ordq.oracles import (
    DEC_CARD,
    SCRIPTED,
    TRUTH,
    FiniteOrdinalSet,
    OmegaMultiplesSet,
    QueryLedger,
    ScriptMismatch,
    extract_script,
    make_effectivizer,
)
from ordq.ordcalc import OMEGA, left_sub, omega_power, parse_ordinal as P, render
from ordq.tam import (
    INPUT,
    PARAM,
    ApproximatorContractError,
    Assign,
    ComputableSubroutine,
    Flag,
    GuessCheckLoop,
    Halt,
    If,
    OracleCall,
    Program,
    ProgramError,
    ScanFirstHit,
    ScanFlagToggleUntil,
    ScanLastHitAtMost,
    SeparationScan,
    const,
    flag_value_after,
    reg,
    replay,
    run,
    run_scripted,
    succ,
)

import tuple_model as tm
from reference_machine import ref_first_hit, ref_flag_scan, ref_last_hit
from test_universe import STRUCTURES, W3, multiples_card, powers_card

WIDE = omega_power(P("w*2"))

FIRST_HIT = Program("first-hit-above-input", (
    ScanFirstHit(slot="check", above=INPUT, register="r"),
    Halt(reg("r")),
))

LAST_HIT = Program("last-hit-at-most-input", (
    ScanLastHitAtMost(slot="check", bound=INPUT, register="r"),
    Halt(reg("r")),
))

FLAG_SCAN = Program("flag-scan-two-bank", (
    ScanFlagToggleUntil(slot="check", start=INPUT,
                        flags=(Flag("a", 0), Flag("b", 1)), register="r"),
    Halt(reg("r")),
))


def dec(structure):
    return {"check": make_effectivizer(DEC_CARD, structure=structure)}


def anchors():
    return [t for t in tm.grid(2)]


class TestFirstHitScan:
    def test_finite_successor_pin(self):
        res = run(FIRST_HIT, P("5"), dec(u.omega_powers(WIDE)))
        assert res.halted and render(res.output) == "6"
        assert render(res.ledger.total_order_type()) == "1"
        assert res.ledger.to_json() == [
            {"kind": "run", "oracle": "DecCard", "from": "5", "to": "6",
             "order_type": "1", "response": "all-0-then-final-1"}]

    def test_limit_target_pin(self):
        res = run(FIRST_HIT, P("w*2+1"), dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w^2"
        assert res.ledger.total_order_type() == left_sub(P("w*2+1"), P("w^2"))

    @pytest.mark.parametrize("name,cs,pred,_", STRUCTURES, ids=[r[0] for r in STRUCTURES])
    def test_agrees_with_event_reference(self, name, cs, pred, _):
        for t in anchors():
            res = run(FIRST_HIT, tm.to_ordinal(t), dec(cs))
            want = ref_first_hit(pred, t)
            if want is None:
                assert res.status == "diverged", t
                continue
            hit, charged = want
            assert res.halted and res.output == tm.to_ordinal(hit), t
            assert res.ledger.total_order_type() == tm.to_ordinal(charged), t
            assert res.halt_time == res.ledger.total_order_type()

    def test_divergence_sweeps_the_rest_of_the_world(self):
        cs = u.explicit_list([P("w*2")], omega_power(3))
        res = run(FIRST_HIT, P("w*2"), dec(cs))
        assert res.status == "diverged" and res.output is None
        assert res.halt_time is None
        assert res.ledger.to_json() == [
            {"kind": "run", "oracle": "DecCard", "from": "w*2", "to": "w^3",
             "order_type": "w^3", "response": "all-0"}]


class TestLastHitScan:
    def test_bound_pin(self):
        res = run(LAST_HIT, P("w*2+1"), dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w"
        assert render(res.ledger.total_order_type()) == "w*2+2"

    def test_declared_charge_drops_the_closing_step(self):
        prog = Program("last-hit-declared", (
            ScanLastHitAtMost(slot="check", bound=INPUT, register="r",
                              charge_closed=False),
            Halt(reg("r")),
        ))
        res = run(prog, P("w*2+1"), dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w"
        assert render(res.ledger.total_order_type()) == "w*2+1"

    @pytest.mark.parametrize("name,cs,pred,_", STRUCTURES, ids=[r[0] for r in STRUCTURES])
    def test_agrees_with_event_reference(self, name, cs, pred, _):
        for t in anchors():
            res = run(LAST_HIT, tm.to_ordinal(t), dec(cs))
            hit, charged = ref_last_hit(pred, t)
            assert res.halted and res.output == tm.to_ordinal(hit), t
            assert res.ledger.total_order_type() == tm.to_ordinal(charged), t

    def test_no_hit_in_window_diverges_after_the_sweep(self):
        bits = make_effectivizer(SCRIPTED, hit_set=FiniteOrdinalSet([P("w")]))
        res = run(LAST_HIT, P("5"), {"check": bits})
        assert res.status == "diverged"
        assert render(res.ledger.total_order_type()) == "6"


class TestFlagScan:
    def test_multiples_pin(self):
        res = run(FLAG_SCAN, OMEGA, dec(u.multiples_of_omega(WIDE)))
        assert render(res.output) == "w^2"
        assert render(res.ledger.total_order_type()) == "w^2"
        assert render(res.halt_time) == "w^2"

    def test_powers_needs_the_next_limit_exponent(self):
        res = run(FLAG_SCAN, OMEGA, dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w^(w)"
        assert res.ledger.total_order_type() == left_sub(OMEGA, omega_power(OMEGA))

    @pytest.mark.parametrize("cs", [u.omega_powers(WIDE), u.multiples_of_omega(WIDE)],
                             ids=["omega-powers", "multiples-of-omega"])
    def test_from_three_halts_at_omega(self, cs):
        res = run(FLAG_SCAN, P("3"), dec(cs))
        assert render(res.output) == "w"
        assert render(res.ledger.total_order_type()) == "w"

    def test_all_ones_bank_exits_at_the_first_hit(self):
        prog = Program("flag-all-ones", (
            ScanFlagToggleUntil(slot="check", start=INPUT,
                                flags=(Flag("a", 1), Flag("b", 1)), register="r"),
            Halt(reg("r")),
        ))
        res = run(prog, P("w+3"), dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w^2"
        assert res.ledger.entries[0].pattern == "all-0-then-final-1"

    def test_all_zero_bank_exits_immediately_for_free(self):
        prog = Program("flag-all-zero", (
            ScanFlagToggleUntil(slot="check", start=INPUT,
                                flags=(Flag("a", 0),), register="r"),
            Halt(reg("r")),
        ))
        res = run(prog, P("w+3"), dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w+3"
        assert len(res.ledger) == 0 and render(res.halt_time) == "0"

    def test_agrees_with_event_reference_on_multiples(self):
        cs = u.multiples_of_omega(W3)
        for t in anchors():
            res = run(FLAG_SCAN, tm.to_ordinal(t), dec(cs))
            want = ref_flag_scan(multiples_card, t, (0, 1))
            assert want is not None and res.halted, t
            exit_point, charged = want
            assert res.output == tm.to_ordinal(exit_point), t
            assert res.ledger.total_order_type() == tm.to_ordinal(charged), t

    def test_agrees_with_event_reference_on_powers(self):
        cs = u.omega_powers(W3)
        for t in anchors():
            res = run(FLAG_SCAN, tm.to_ordinal(t), dec(cs))
            want = ref_flag_scan(powers_card, t, (0, 1))
            if want is None:
                assert res.status == "diverged", t
            else:
                exit_point, charged = want
                assert res.output == tm.to_ordinal(exit_point), t
                assert res.ledger.total_order_type() == tm.to_ordinal(charged), t


class TestGuessCheck:
    def prog(self, chain):
        return Program("guess-check", (
            GuessCheckLoop(slot="check", guesses=lambda i, p: iter(chain),
                           register="r"),
            Halt(reg("r")),
        ))

    def test_stops_at_first_positive_check(self):
        res = run(self.prog([P("w^2+3"), P("w+7"), OMEGA]), P("w^2+5"),
                  dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w"
        assert len(res.ledger) == 3
        assert all(e.to_json()["kind"] == "single" for e in res.ledger)
        assert render(res.halt_time) == "3"

    def test_immediate_hit(self):
        res = run(self.prog([OMEGA]), OMEGA, dec(u.omega_powers(WIDE)))
        assert render(res.output) == "w" and len(res.ledger) == 1

    def test_increasing_guesses_are_rejected(self):
        with pytest.raises(ApproximatorContractError):
            run(self.prog([P("w+1"), P("w+2")]), OMEGA, dec(u.omega_powers(WIDE)))

    def test_consecutive_repeats_collapse(self):
        res = run(self.prog([P("5"), P("5"), P("3")]), P("9"),
                  dec(u.omega_powers(WIDE)))
        assert render(res.output) == "5" and len(res.ledger) == 1

    def test_exhausted_source_diverges(self):
        res = run(self.prog([P("w+1")]), P("w+5"), dec(u.omega_powers(WIDE)))
        assert res.status == "diverged" and len(res.ledger) == 1


SEP_PROG = Program("separate-by-truth", (
    SeparationScan(slot="truth", register="r"),
    Halt(reg("r")),
))


def sep_input(s, formula, params=()):
    return (u.encode_hf(s), formula_index(parse_formula(formula)),
            tuple(u.encode_hf(p) for p in params))


class TestSeparationScan:
    TRUTH_BINDING = {"truth": make_effectivizer(TRUTH, level=2, rank=3)}

    def test_memberless_filter(self):
        s = u.hf(u.hf(), u.hf(u.hf()))
        res = run(SEP_PROG, sep_input(s, "A v0 (!(v0 in #0))"), self.TRUTH_BINDING)
        assert u.decode_set(res.output) == u.hf(u.hf())
        assert len(res.ledger) == 2 and render(res.halt_time) == "2"

    def test_empty_set_makes_no_calls(self):
        res = run(SEP_PROG, sep_input(u.hf(), "A v0 (!(v0 in #0))"), self.TRUTH_BINDING)
        assert u.decode_set(res.output) == u.hf() and len(res.ledger) == 0

    def test_always_true_keeps_everything(self):
        s = u.hf(u.hf(), u.hf(u.hf()), u.hf(u.hf(u.hf())))
        res = run(SEP_PROG, sep_input(s, "E v0 (v0 = #0)"), self.TRUTH_BINDING)
        assert u.decode_set(res.output) == s and len(res.ledger) == 3

    def test_arity_mismatch_outputs_empty_with_zero_calls(self):
        s = u.hf(u.hf())
        res = run(SEP_PROG, sep_input(s, "E v0 (v0 in #0 & v0 in #1)"),
                  self.TRUTH_BINDING)
        assert u.decode_set(res.output) == u.hf() and len(res.ledger) == 0

    def test_bad_input_shape_is_a_program_error(self):
        with pytest.raises(ProgramError):
            run(SEP_PROG, P("3"), self.TRUTH_BINDING)


class TestControlFlow:
    def test_if_branches_on_finiteness(self):
        prog = Program("finite-shortcut", (
            If(("is-finite", INPUT),
               then_branch=(Halt(INPUT),),
               else_branch=(Assign("r", succ(INPUT)), Halt(reg("r")))),
        ))
        assert render(run(prog, P("7"), {}).output) == "7"
        assert render(run(prog, P("w"), {}).output) == "w+1"

    def test_param_and_subroutine(self):
        prog = Program("shift-by-param", (
            ComputableSubroutine("add", lambda a, b: a + b, (PARAM, INPUT), "r"),
            Halt(reg("r")),
        ), parameter=P("w"))
        assert render(run(prog, P("3"), {}).output) == "w+3"

    def test_unbound_slot(self):
        with pytest.raises(ProgramError):
            run(FIRST_HIT, P("3"), {})

    def test_register_read_before_assignment(self):
        prog = Program("bad-register", (Halt(reg("never")),))
        with pytest.raises(ProgramError):
            run(prog, P("0"), {})

    def test_missing_halt(self):
        prog = Program("no-halt", (Assign("r", const(P("1"))),))
        with pytest.raises(ProgramError):
            run(prog, P("0"), {})

    def test_budget_must_be_positive(self):
        with pytest.raises(ProgramError):
            run(FIRST_HIT, P("3"), dec(u.omega_powers(WIDE)), budget=0)


class TestScripted:
    def test_pointwise_first_hit(self):
        assert render(run_scripted(FIRST_HIT, P("5"), [1]).output) == "6"
        res = run_scripted(FIRST_HIT, P("5"), [0, 0, 1])
        assert render(res.output) == "8"
        assert render(res.ledger.total_order_type()) == "3"

    def test_empty_script_reports_exhaustion(self):
        res = run_scripted(FIRST_HIT, P("5"), [])
        assert res.status == "script-exhausted" and res.output is None

    def test_pointwise_last_hit_on_a_finite_bound(self):
        res = run_scripted(LAST_HIT, P("3"), [1, 0, 0, 1])
        assert render(res.output) == "3"
        assert render(res.ledger.total_order_type()) == "4"

    def test_pointwise_script_cannot_feed_a_transfinite_sweep(self):
        res = run_scripted(LAST_HIT, OMEGA, [1, 0, 1])
        assert res.status == "script-exhausted"

    def test_pointwise_flag_scan_all_ones(self):
        prog = Program("flag-all-ones", (
            ScanFlagToggleUntil(slot="check", start=INPUT,
                                flags=(Flag("a", 1),), register="r"),
            Halt(reg("r")),
        ))
        res = run_scripted(prog, P("4"), [0, 1])
        assert render(res.output) == "6"
        assert render(res.ledger.total_order_type()) == "2"

    def test_single_call_consumes_one_value(self):
        prog = Program("one-call", (
            OracleCall(slot="check", arg=INPUT, register="r"),
            Halt(reg("r")),
        ))
        res = run_scripted(prog, P("w"), [P("w^2")])
        assert render(res.output) == "w^2" and len(res.ledger) == 1

    def test_run_segment_rejected_by_pointwise_call(self):
        prog = Program("one-call", (
            OracleCall(slot="check", arg=INPUT, register="r"),
            Halt(reg("r")),
        ))
        source = run(FIRST_HIT, P("w*2+1"), dec(u.omega_powers(WIDE)))
        with pytest.raises(ScriptMismatch):
            run_scripted(prog, P("w"), extract_script(source.ledger))


class TestReplay:
    def runs(self):
        powers, mults = u.omega_powers(WIDE), u.multiples_of_omega(WIDE)
        yield FIRST_HIT, P("5"), run(FIRST_HIT, P("5"), dec(powers))
        yield FIRST_HIT, P("w*2+1"), run(FIRST_HIT, P("w*2+1"), dec(powers))
        yield LAST_HIT, P("w*2+1"), run(LAST_HIT, P("w*2+1"), dec(powers))
        yield FLAG_SCAN, OMEGA, run(FLAG_SCAN, OMEGA, dec(mults))
        yield FLAG_SCAN, OMEGA, run(FLAG_SCAN, OMEGA, dec(powers))
        ex = u.explicit_list([P("w*2")], omega_power(3))
        yield FLAG_SCAN, OMEGA, run(FLAG_SCAN, OMEGA, dec(ex))      # diverges
        gc = Program("guess-check", (
            GuessCheckLoop(slot="check",
                           guesses=lambda i, p: iter([P("w^2+3"), P("w+7"), OMEGA]),
                           register="r"),
            Halt(reg("r")),
        ))
        yield gc, P("w^2+5"), run(gc, P("w^2+5"), dec(powers))
        s = u.hf(u.hf(), u.hf(u.hf()))
        inp = sep_input(s, "A v0 (!(v0 in #0))")
        yield SEP_PROG, inp, run(SEP_PROG, inp,
                                 {"truth": make_effectivizer(TRUTH, level=2, rank=3)})

    def test_replaying_the_recorded_script_reproduces_the_run(self):
        for prog, inp, res in self.runs():
            again = replay(prog, inp, res)
            assert again.same_as(res), (prog.name, again.status, res.status)

    def test_budget_increase_never_changes_a_result(self):
        powers = u.omega_powers(WIDE)
        a = run(FIRST_HIT, P("w*2+1"), dec(powers), budget=3)
        b = run(FIRST_HIT, P("w*2+1"), dec(powers), budget=3000)
        assert a.same_as(b)

    def test_ledger_time_coherence(self):
        for prog, inp, res in self.runs():
            if res.halted:
                assert res.ledger.total_order_type() <= res.halt_time


class TestFlagValueAfter:
    def test_cofinal_toggles_read_zero_at_the_limit(self):
        assert flag_value_after(1, OmegaMultiplesSet(), omega_power(2)) == 0

    def test_even_parity(self):
        assert flag_value_after(0, FiniteOrdinalSet([10, 20]), 30) == 0

    def test_no_toggles_is_constant(self):
        assert flag_value_after(0, FiniteOrdinalSet([]), OMEGA) == 0
        assert flag_value_after(1, FiniteOrdinalSet([]), OMEGA) == 1
