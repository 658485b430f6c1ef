import random

import pytest
from hypothesis import given, settings

from chorec.choreography import (
    END,
    Expr,
    Label,
    ProcState,
    annotate_calls,
    inc,
    parse_choreography,
    print_choreography,
)
from chorec.corpus import gen_choreography
from chorec.errors import MergeError, ProjectabilityError
from chorec.network import (
    BCall,
    BDef,
    BEND,
    EMPTY,
    Branch,
    CondRecv,
    Recv,
    Send,
    branch,
    parse_network,
    print_network,
)
from chorec.projection import (
    UnmergeablePoint,
    amend,
    epp,
    is_projectable,
    merge,
    project_behaviour,
    prunes_to,
    try_merge,
    unmergeable_points,
)
from chorec.semantics import run
from chorec.trace import Outcome

from strategies import behaviours, recursive, states


def mc(text):
    return annotate_calls(parse_choreography(text))


class TestProjectBehaviour:
    def test_selected_at_r(self, sample):
        b = project_behaviour(mc(sample("selected.mc")), "r")
        assert b == branch("p", {Label.L: Recv("p", BEND), Label.R: Send("p", Expr.CELL, BEND)})

    def test_unselected_at_r(self, sample):
        res = project_behaviour(mc(sample("cond.mc")), "r")
        assert isinstance(res, UnmergeablePoint)
        assert res.process == "r" and res.path == ()
        assert res.left == Recv("p", BEND) and res.right == BEND

    def test_inc_at_p(self):
        assert project_behaviour(inc("p", "t"), "p") == Send("t", Expr.CELL, Recv("t", BEND))

    def test_conditional_at_chooser_and_partner(self, sample):
        c = mc(sample("selected.mc"))
        at_p = project_behaviour(c, "p")
        assert isinstance(at_p, CondRecv) and at_p.frm == "q"
        assert project_behaviour(c, "q") == Send("p", Expr.CELL, BEND)

    def test_uninvolved_process(self):
        assert project_behaviour(inc("p", "t"), "z") == BEND

    def test_recursion_only_for_annotated(self, sample):
        c = mc(sample("add.mc"))
        at_p = project_behaviour(c, "p")
        assert isinstance(at_p, BDef) and at_p.name == "X"
        c2 = mc("def X = (p.c -> q; X) in r.c -> s; X")
        assert project_behaviour(c2, "r") == Send("s", Expr.CELL, BEND)
        assert project_behaviour(c2, "p") == BDef("X", Send("q", Expr.CELL, BCall("X")), BCall("X"))

    def test_innermost_point(self):
        c = mc("if p = q then (if q = s then (p.c -> r; 0) else (0)) else (0)")
        res = project_behaviour(c, "r")
        assert isinstance(res, UnmergeablePoint) and res.path == (0,)


class TestMerge:
    def test_idempotent_example(self):
        b = Recv("p", BEND)
        assert merge(b, b) == b

    def test_distinct_labels_union(self):
        b1, b2 = Recv("q", BEND), Send("q", Expr.CELL, BEND)
        got = merge(Branch("p", ((Label.L, b1),)), Branch("p", ((Label.R, b2),)))
        assert got == branch("p", {Label.L: b1, Label.R: b2})

    def test_recv_vs_end_undefined(self):
        with pytest.raises(MergeError) as err:
            merge(Recv("p", BEND), BEND)
        assert err.value.left == Recv("p", BEND) and err.value.right == BEND
        assert try_merge(Recv("p", BEND), BEND) is None

    def test_same_label_merged_recursively(self):
        left = Branch("p", ((Label.L, Branch("q", ((Label.L, BEND),))),))
        right = Branch("p", ((Label.L, Branch("q", ((Label.R, BEND),))),))
        inner = branch("q", {Label.L: BEND, Label.R: BEND})
        assert merge(left, right) == Branch("p", ((Label.L, inner),))

    def test_innermost_mismatch_reported(self):
        with pytest.raises(MergeError) as err:
            merge(Send("p", Expr.CELL, Recv("q", BEND)), Send("p", Expr.CELL, BEND))
        assert err.value.left == Recv("q", BEND)

    def test_distinct_calls(self):
        assert try_merge(BCall("X"), BCall("Y")) is None

    @given(behaviours)
    def test_idempotence(self, b):
        assert merge(b, b) == b

    @given(behaviours, behaviours)
    def test_commutativity(self, a, b):
        assert try_merge(a, b) == try_merge(b, a)

    @given(behaviours, behaviours, behaviours)
    def test_associativity_where_defined(self, a, b, c):
        ab, bc = try_merge(a, b), try_merge(b, c)
        left = try_merge(ab, c) if ab is not None else None
        right = try_merge(a, bc) if bc is not None else None
        if left is not None and right is not None:
            assert left == right


class TestEpp:
    def test_inc(self, golden):
        n = epp(inc("p", "t"), ProcState({"p": 2}))
        assert print_network(n) == golden("inc.sp")
        assert n == parse_network(golden("inc.sp"))

    def test_unselected(self, sample):
        with pytest.raises(ProjectabilityError) as err:
            epp(mc(sample("unselected.mc")), ProcState())
        assert [p.process for p in err.value.points] == ["r"]

    def test_all_failing_processes_reported(self):
        c = mc("if p = q then (p.c -> r; p.c -> s; 0) else (0)")
        assert [p.process for p in unmergeable_points(c)] == ["r", "s"]

    def test_empty(self):
        assert epp(END, ProcState()) == EMPTY

    def test_diagnostic_json(self, sample):
        (point,) = unmergeable_points(mc(sample("unselected.mc")))
        doc = point.to_json()
        assert doc["path"] == [] and doc["process"] == "r" and "recv p" in doc["reason"]

    @settings(max_examples=50)
    @given(recursive, states, states)
    def test_projectability_state_independent(self, c, s1, s2):
        c = annotate_calls(c)
        ok = is_projectable(c)
        for s in (s1, s2):
            try:
                n = epp(c, ProcState(s))
            except ProjectabilityError:
                assert not ok
            else:
                assert ok
                for proc in n.procs:
                    assert proc.value == ProcState(s)[proc.name]


class TestPrunes:
    def test_reflexive(self):
        n = parse_network("p[1] > branch q {L: 0, R: send q.c; 0} | q[0] > sel p[L]; 0")
        assert prunes_to(n, n)

    def test_single_deletion(self):
        big = parse_network("p[1] > branch q {L: recv q; 0, R: send q.c; 0} | q[0] > sel p[L]; send p.c; 0")
        small = parse_network("p[1] > branch q {L: recv q; 0} | q[0] > sel p[L]; send p.c; 0")
        assert prunes_to(big, small)
        assert not prunes_to(small, big)

    def test_only_deletes(self):
        assert not prunes_to(parse_network("p[0] > 0 | q[0] > send p.c; 0"),
                             parse_network("p[0] > recv q; 0 | q[0] > send p.c; 0"))

    def test_cells_must_agree(self):
        assert not prunes_to(parse_network("p[0] > send q.c; 0"), parse_network("p[1] > send q.c; 0"))

    def test_dead_definition_erased(self):
        big = parse_network("p[0] > def X = (send q.c; X) in send q.c; 0 | q[0] > recv p; 0")
        small = parse_network("p[0] > send q.c; 0 | q[0] > recv p; 0")
        assert prunes_to(big, small)

    def test_unfolding_is_transparent(self):
        big = parse_network("p[0] > def X = (send q.c; X) in X")
        small = parse_network("p[0] > def X = (send q.c; X) in send q.c; X")
        assert prunes_to(big, small) and prunes_to(small, big)


class TestAmend:
    def test_cond_example(self, sample, golden):
        assert print_choreography(amend(mc(sample("cond.mc")))) == golden("amend_cond.mc")

    def test_mergeable_unchanged(self, sample, golden):
        c = mc(sample("merge-ok.mc"))
        assert amend(c) == c
        assert print_choreography(amend(c)) == golden("amend_unchanged.mc")

    def test_end(self):
        assert amend(END) == END

    def test_unselected_amended(self, sample):
        assert print_choreography(amend(mc(sample("unselected.mc")))) == \
            print_choreography(mc(sample("selected.mc")))

    def test_selection_order_is_first_occurrence(self):
        c = mc("if p = q then (p.c -> s; p.c -> r; 0) else (0)")
        assert print_choreography(amend(c)) == \
            "if p = q then (p -> s[L]; p -> r[L]; p.c -> s; p.c -> r; 0) else (p -> s[R]; p -> r[R]; 0)"

    def test_partner_q_included_when_needed(self):
        c = mc("if p = q then (q.c -> p; 0) else (0)")
        out = amend(c)
        assert print_choreography(out) == \
            "if p = q then (p -> q[L]; q.c -> p; 0) else (p -> q[R]; 0)"
        assert is_projectable(out)

    def test_idempotent(self, sample):
        c = amend(mc(sample("unselected.mc")))
        assert amend(c) == c

    @settings(max_examples=60)
    @given(recursive)
    def test_output_projectable(self, c):
        assert is_projectable(amend(c))

    @settings(max_examples=40)
    @given(recursive, states)
    def test_final_states_agree(self, c, s):
        c = annotate_calls(c)
        st = ProcState(s)
        a = run(c, st, fuel=2000)
        b = run(amend(c), st, fuel=2000)
        if a.outcome is Outcome.TERMINATED and b.outcome is Outcome.TERMINATED:
            assert a.final_state == b.final_state


def test_corpus_seeded_projectability():
    rng = random.Random(3)
    for _ in range(50):
        c = gen_choreography(rng, 16)
        assert is_projectable(amend(c))
