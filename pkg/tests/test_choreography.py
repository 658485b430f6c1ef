import warnings

import pytest
from hypothesis import given

from chorec.choreography import (
    END,
    Call,
    Com,
    Cond,
    Def,
    Expr,
    Label,
    ProcState,
    Sel,
    ShadowingWarning,
    annotate_calls,
    exit_points,
    inc,
    parse_choreography,
    print_choreography,
    proc_names,
    seq_compose,
    strip_annotations,
)
from chorec.errors import (
    MultipleExitPoints,
    NoExitPoint,
    ParseError,
    SelfCommunicationError,
    UnboundProcedureError,
    UnguardedRecursionError,
)

from strategies import loop_free, recursive


class TestParse:
    def test_inc_macro_text(self):
        c = parse_choreography("p.c -> t; t.(s c) -> p; 0")
        assert c == Com("p", Expr.CELL, "t", Com("t", Expr.SUCC, "p", END))
        assert c == inc("p", "t")

    def test_end(self):
        assert parse_choreography("0") is END

    def test_self_communication_rejected(self):
        with pytest.raises(SelfCommunicationError):
            parse_choreography("p.c -> p; 0")
        with pytest.raises(SelfCommunicationError):
            parse_choreography("if p = p then (0) else (0)")

    def test_unbound_call_rejected(self):
        with pytest.raises(UnboundProcedureError):
            parse_choreography("p.c -> q; X")

    def test_call_out_of_scope_rejected(self):
        with pytest.raises(UnboundProcedureError):
            parse_choreography("if p = q then (def X = (p.c -> q; X) in X) else (X)")

    def test_unguarded_recursion_rejected(self):
        with pytest.raises(UnguardedRecursionError):
            parse_choreography("def X = X in X")
        with pytest.raises(UnguardedRecursionError):
            parse_choreography("def X = (def Y = X in Y) in X")

    def test_guarded_mutual_recursion_accepted(self):
        parse_choreography("def X = (def Y = (p.c -> q; X) in Y) in X")

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as info:
            parse_choreography("p.c -> q;\n  q.x -> p; 0")
        assert (info.value.line, info.value.col) == (2, 5)

    def test_syntax_error_is_a_syntax_error(self):
        with pytest.raises(SyntaxError):
            parse_choreography("p.c -> ")

    def test_procedure_names_must_be_uppercase(self):
        with pytest.raises(ParseError):
            parse_choreography("def x = (p.c -> q; 0) in 0")

    def test_comments_and_whitespace(self):
        text = "# increment\np.c -> t;   # send\n t.(s c) -> p; 0\n"
        assert parse_choreography(text) == inc("p", "t")

    def test_unparenthesised_successor(self):
        assert parse_choreography("p.s c -> q; 0") == Com("p", Expr.SUCC, "q", END)

    def test_auxiliary_names(self):
        c = parse_choreography("r#0.c -> r#12; 0")
        assert proc_names(c) == {"r#0", "r#12"}

    def test_shadowing_warns(self):
        with pytest.warns(ShadowingWarning):
            parse_choreography("def X = (p.c -> q; 0) in def X = (q.c -> p; X) in X")

    def test_no_warning_without_shadowing(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            parse_choreography("def X = (p.c -> q; 0) in def Y = (q.c -> p; Y) in X")


class TestPrint:
    def test_end(self):
        assert print_choreography(END) == "0"

    def test_com(self):
        assert print_choreography(Com("p", Expr.EPS, "q", END)) == "p.eps -> q; 0"

    def test_sel(self):
        assert print_choreography(Sel("p", "q", Label.L, END)) == "p -> q[L]; 0"

    def test_cond_and_def(self):
        c = Def("X", Com("p", Expr.CELL, "q", Call("X")), Cond("p", "q", END, Call("X")))
        assert print_choreography(c) == "def X = (p.c -> q; X) in if p = q then (0) else (X)"

    @given(loop_free)
    def test_round_trip_loop_free(self, c):
        assert parse_choreography(print_choreography(c)) == c

    @given(recursive)
    def test_round_trip_recursive(self, c):
        assert parse_choreography(print_choreography(c)) == c


class TestStaticHelpers:
    def test_proc_names(self):
        assert proc_names(inc("p", "t")) == {"p", "t"}
        assert proc_names(END) == frozenset()
        assert proc_names(Cond("p", "q", END, END)) == {"p", "q"}

    def test_proc_names_of_annotated_call(self):
        assert proc_names(Call("X", frozenset({"a", "b"}))) == {"a", "b"}

    def test_exit_points(self):
        assert exit_points(inc("p", "t")) == 1
        assert exit_points(Cond("p", "q", END, END)) == 2
        assert exit_points(Call("X")) == 0

    def test_exit_points_count_bodies_once(self):
        c = parse_choreography("def X = (p.c -> q; 0) in q.c -> p; X")
        assert exit_points(c) == 1

    def test_seq_compose_identity(self):
        assert seq_compose(inc("p", "t"), END) == inc("p", "t")

    def test_seq_compose_two_incs(self):
        got = seq_compose(inc("p", "t1"), inc("r", "t2"))
        want = parse_choreography("p.c -> t1; t1.(s c) -> p; r.c -> t2; t2.(s c) -> r; 0")
        assert got == want

    def test_seq_compose_errors(self):
        with pytest.raises(MultipleExitPoints):
            seq_compose(Cond("p", "q", END, END), Call("X"))
        with pytest.raises(NoExitPoint):
            seq_compose(Call("X"), END)

    @given(loop_free, loop_free)
    def test_seq_compose_properties(self, c1, c2):
        if exit_points(c1) != 1:
            return
        both = seq_compose(c1, c2)
        assert proc_names(both) == proc_names(c1) | proc_names(c2)
        assert exit_points(both) == exit_points(c2)


class TestAnnotate:
    def test_simple_loop(self):
        c = annotate_calls(parse_choreography("def X = (p.c -> q; X) in X"))
        assert c.annotation == {"p", "q"}
        assert c.cont.annotation == {"p", "q"}

    def test_empty_body(self):
        c = annotate_calls(parse_choreography("def X = (0) in X"))
        assert c.annotation == frozenset()

    def test_add_macro(self, sample):
        c = annotate_calls(parse_choreography(sample("add.mc")))
        assert c.annotation == {"p", "q", "r", "t1", "t2"}

    def test_nested_calls_resolve_to_annotations(self):
        c = annotate_calls(parse_choreography(
            "def X = (p.c -> q; 0) in def Y = (r.c -> s; X) in Y"))
        assert c.cont.annotation == {"p", "q", "r", "s"}

    @given(recursive)
    def test_idempotent(self, c):
        once = annotate_calls(c)
        assert annotate_calls(once) == once
        assert strip_annotations(once) == strip_annotations(c)


class TestProcState:
    def test_total_with_zero_default(self):
        s = ProcState({"p": 3})
        assert s["p"] == 3 and s["nobody"] == 0

    def test_parse(self):
        assert ProcState.parse("p=3, q=0,r=1") == ProcState({"p": 3, "r": 1})

    def test_parse_rejects_garbage(self):
        with pytest.raises(ParseError):
            ProcState.parse("p=x")
        with pytest.raises(ParseError):
            ProcState.parse("P=1")

    def test_big_values(self):
        s = ProcState({"p": 10**30})
        assert s["p"] == 10**30
