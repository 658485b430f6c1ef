import json
import random

import pytest
from hypothesis import given, settings

from chorec.choreography import (
    END,
    Call,
    Com,
    Cond,
    Expr,
    ProcState,
    inc,
    parse_choreography,
    print_choreography,
    seq_compose,
)
from chorec.errors import HasConditional, InvalidRedex, PreconditionViolation
from chorec.semantics import (
    Termination,
    check_parallel_run,
    decide_termination_condfree,
    enabled_redexes,
    explore,
    is_terminated,
    run,
    step,
)
from chorec.trace import Exhaustive, Leftmost, Outcome, Random

from strategies import loop_free, recursive, recursive_condfree, states


def S(**kw):
    return ProcState(kw)


class TestEnabledRedexes:
    def test_swap_example_with_open_tail(self):
        c = seq_compose(inc("p", "t1"), seq_compose(inc("r", "t2"), Call("X")))
        redexes = enabled_redexes(c)
        assert [str(r) for r in redexes] == ["p.c -> t1", "r.c -> t2"]
        assert redexes[1].path == (0, 0)
        assert redexes[1].swapped_past == ((), (0,))

    def test_single(self):
        assert len(enabled_redexes(Com("p", Expr.CELL, "q", END))) == 1

    def test_terminated(self):
        assert enabled_redexes(END) == []

    def test_crossing_a_conditional(self):
        c = parse_choreography("if p = q then (r.c -> s; 0) else (r.c -> s; p.c -> q; 0)")
        assert [str(r) for r in enabled_redexes(c)] == ["if p = q", "r.c -> s"]

    def test_no_crossing_when_only_one_branch_allows(self):
        c = parse_choreography("if p = q then (r.c -> s; 0) else (s.c -> r; 0)")
        assert [str(r) for r in enabled_redexes(c)] == ["if p = q"]

    def test_dependent_prefix_blocks(self):
        c = parse_choreography("p.c -> q; q.c -> r; 0")
        assert [str(r) for r in enabled_redexes(c)] == ["p.c -> q"]

    def test_unfolds_recursion(self):
        c = parse_choreography("def X = (p.c -> q; r.c -> s; X) in X")
        assert [str(r) for r in enabled_redexes(c)] == ["p.c -> q", "r.c -> s"]

    def test_redex_kinds(self):
        c = parse_choreography("if p = q then (0) else (0)")
        assert enabled_redexes(c)[0].kind == "CondStep"


class TestStep:
    def test_com_copies_cell(self):
        c, s = step(Com("p", Expr.CELL, "q", END), S(p=1), enabled_redexes(Com("p", Expr.CELL, "q", END))[0])
        assert c == END and s == S(p=1, q=1)

    def test_com_successor(self):
        c0 = Com("p", Expr.SUCC, "q", END)
        c, s = step(c0, S(p=7), enabled_redexes(c0)[0])
        assert c == END and s == S(p=7, q=8)

    def test_cond_else_branch(self):
        c0 = parse_choreography("if p = q then (p.c -> r; 0) else (q.c -> r; 0)")
        c, s = step(c0, S(p=0, q=1), enabled_redexes(c0)[0])
        assert c == parse_choreography("q.c -> r; 0") and s == S(p=0, q=1)

    def test_cond_then_branch(self):
        c0 = parse_choreography("if p = q then (p.c -> r; 0) else (q.c -> r; 0)")
        c, _ = step(c0, S(p=2, q=2), enabled_redexes(c0)[0])
        assert c == parse_choreography("p.c -> r; 0")

    def test_invalid_redex(self):
        c0 = parse_choreography("p.c -> q; q.c -> r; 0")
        blocked = enabled_redexes(parse_choreography("q.c -> r; 0"))[0]
        with pytest.raises(InvalidRedex):
            step(c0, S(), blocked)

    def test_out_of_order_step(self):
        c0 = parse_choreography("p.c -> q; r.eps -> s; 0")
        later = enabled_redexes(c0)[1]
        c, s = step(c0, S(p=1, r=5, s=5), later)
        assert c == parse_choreography("p.c -> q; 0")
        assert s == S(p=1, r=5)

    def test_finished_definitions_are_erased(self):
        c0 = parse_choreography("def X = (p.c -> q; X) in r.c -> s; 0")
        c, _ = step(c0, S(), enabled_redexes(c0)[0])
        assert c == END

    @settings(max_examples=60)
    @given(recursive, states)
    def test_state_frame(self, c, st):
        state = ProcState(st)
        for r in enabled_redexes(c):
            _, after = step(c, state, r)
            changed = {n for n in "pqrs" if after[n] != state[n]}
            if r.action.kind == "com":
                assert changed <= {r.action.q}
            else:
                assert not changed


class TestRun:
    def test_inc(self):
        t = run(inc("p", "t"), S(p=3), fuel=10)
        assert t.outcome is Outcome.TERMINATED and t.final_state["p"] == 4
        assert t.length == 2

    def test_loop_exhausts(self):
        t = run(parse_choreography("def X = (p.eps -> q; X) in X"), S(), fuel=50)
        assert t.outcome is Outcome.FUEL_EXHAUSTED and t.length == 50

    @pytest.mark.parametrize("sched", [Leftmost(), Random(3)])
    def test_end_terminates_immediately(self, sched):
        t = run(END, S(p=1), fuel=5, scheduler=sched)
        assert t.outcome is Outcome.TERMINATED and t.length == 0

    def test_end_exhaustive(self):
        traces = run(END, S(), fuel=5, scheduler=Exhaustive())
        assert len(traces) == 1 and traces[0].outcome is Outcome.TERMINATED

    def test_add_macro(self, sample):
        c = parse_choreography(sample("add.mc"))
        for seed in range(5):
            t = run(c, S(p=2, q=3), fuel=1000, scheduler=Random(seed))
            assert t.outcome is Outcome.TERMINATED
            assert t.final_state["p"] == 5 and t.final_state["q"] == 3

    def test_random_is_reproducible(self, sample):
        c = parse_choreography(sample("add.mc"))
        a = run(c, S(p=1, q=2), scheduler=Random(11))
        b = run(c, S(p=1, q=2), scheduler=Random(11))
        assert a.actions == b.actions and a.seed == 11

    def test_exhaustive_enumerates_interleavings(self):
        c = seq_compose(inc("p", "t1"), inc("r", "t2"))
        traces = run(c, S(p=1, r=5), scheduler=Exhaustive())
        assert len(traces) == 6
        assert {t.final_state for t in traces} == {S(p=2, t1=1, r=6, t2=5)}

    def test_record_false_keeps_endpoints(self):
        t = run(inc("p", "t"), S(p=3), record=False)
        assert len(t.steps) == 2 and t.final_state["p"] == 4

    def test_records_are_json_lines(self):
        t = run(inc("p", "t"), S(p=1), scheduler=Random(4))
        lines = [json.loads(x) for x in t.records(print_choreography)]
        assert [x.get("step") for x in lines[:-1]] == [0, 1, 2]
        assert lines[0]["redex"] == "p.c -> t"
        assert lines[-1] == {"outcome": "Terminated", "steps": 2, "seed": 4,
                             "final_state": {"p": 2, "t": 1}}


class TestProgressAndConfluence:
    @settings(max_examples=60)
    @given(recursive, states)
    def test_every_reachable_configuration_progresses(self, c, st):
        graph = explore(c, ProcState(st), depth=15, max_configs=500)
        for conf in graph.edges:
            assert is_terminated(conf[0]) or enabled_redexes(conf[0])

    @settings(max_examples=60)
    @given(loop_free, states)
    def test_results_are_deterministic(self, c, st):
        finals = {t.final_state for t in run(c, ProcState(st), scheduler=Exhaustive(depth=40))}
        assert len(finals) == 1

    @settings(max_examples=60)
    @given(loop_free, states)
    def test_swap_soundness(self, c, st):
        state = ProcState(st)
        reference = run(c, state, fuel=100)
        for r in enabled_redexes(c):
            if not r.swapped_past:
                continue
            c2, s2 = step(c, state, r)
            rest = run(c2, s2, fuel=100)
            assert rest.outcome is Outcome.TERMINATED
            assert rest.final_state == reference.final_state


class TestParallelRun:
    def test_two_increments(self):
        report = check_parallel_run(inc("p", "t1"), inc("r", "t2"), S(p=1, r=4))
        assert report.interleavings == 6
        assert len(report.realized) == 6 and report.ok

    def test_empty_first_component(self):
        report = check_parallel_run(END, inc("r", "t2"), S(r=4))
        assert report.interleavings == 1 and report.ok

    def test_shared_process(self):
        with pytest.raises(PreconditionViolation):
            check_parallel_run(inc("p", "t1"), inc("p", "t2"))

    def test_dependent_sequence_is_not_parallel(self):
        # not disjoint by names, so the precondition rejects it before any search
        with pytest.raises(PreconditionViolation):
            check_parallel_run(inc("p", "t"), parse_choreography("t.c -> r; 0"))

    def test_first_component_needs_one_exit(self):
        with pytest.raises(PreconditionViolation):
            check_parallel_run(Cond("p", "q", END, END), inc("r", "t"))

    def test_nonterminating_component(self):
        loop = parse_choreography("def X = (a.c -> b; X) in X")
        with pytest.raises(PreconditionViolation):
            check_parallel_run(inc("p", "t"), loop, fuel=30)


class TestTerminationDecider:
    def test_loop_diverges(self):
        c = parse_choreography("def X = (p.eps -> q; X) in X")
        assert decide_termination_condfree(c) is Termination.DIVERGES
        assert run(c, S(), fuel=100).outcome is Outcome.FUEL_EXHAUSTED

    def test_straight_line(self):
        assert decide_termination_condfree(parse_choreography("p.c -> q; 0")) is Termination.TERMINATES

    def test_single_unfold(self):
        c = parse_choreography("def X = (p.eps -> q; 0) in X")
        assert decide_termination_condfree(c) is Termination.TERMINATES

    def test_uncalled_loop(self):
        c = parse_choreography("def X = (p.eps -> q; X) in r.c -> s; 0")
        assert decide_termination_condfree(c) is Termination.TERMINATES

    def test_rejects_conditionals(self):
        with pytest.raises(HasConditional):
            decide_termination_condfree(parse_choreography("if p = q then (0) else (0)"))

    @settings(max_examples=150)
    @given(recursive_condfree)
    def test_agrees_with_runner(self, c):
        verdict = decide_termination_condfree(c)
        outcome = run(c, S(), fuel=10_000, record=False).outcome
        assert (verdict is Termination.TERMINATES) == (outcome is Outcome.TERMINATED)
