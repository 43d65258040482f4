import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
import reference as ref

from mobilemem.core import (
    INF,
    Carry,
    Configuration,
    EndoRule,
    ExoRule,
    Fresh,
    Multiset,
    RewriteRule,
    Symbol,
    canonicalize,
    mem,
)
from mobilemem.engine import (
    StaleChoiceError,
    apply_step,
    find_instances,
    maximal_choices,
    residual_instances,
    run,
    step,
    step_choices,
    successors,
)
from mobilemem.corpus import random_soak_system, random_timed_system

a, b, c, d, p, x, y = (Symbol(s) for s in "abcdpxy")
DELTA = Symbol("delta")


def s1():
    h = mem("h", 3, [(a, 2), (b, 5)])
    m = mem("m", INF, [(a.dual(), 4)])
    return Configuration(mem("skin", INF, [], [h, m]))


E1 = EndoRule("h", "m", Multiset([a]), w=((c, Fresh(7)),), name="E1")


def keys(pairs):
    return sorted(canonicalize(cfg) for _ch, cfg in pairs)


# ---------------------------------------------------------------------------
# Instance matching

def test_find_instances_single_endo():
    inst = find_instances(s1(), [E1])
    assert len(inst) == 1
    only = inst[0]
    assert only.rule is E1
    assert only.active_classes == ((a, 2),)
    assert only.passive_classes == ((a.dual(), 4),)


def test_no_instance_on_zero_timer_object():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 0), (b, 5)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    assert find_instances(cfg, [E1]) == []


def test_no_instance_when_active_not_elementary():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2)], [mem("k", 1)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    assert find_instances(cfg, [E1]) == []


def test_no_instance_on_zero_timer_membranes():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 0, [(a, 2)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    assert find_instances(cfg, [E1]) == []
    cfg2 = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2)]), mem("m", 0, [(a.dual(), 4)]),
    ]))
    assert find_instances(cfg2, [E1]) == []


def test_binding_classes_distinguish_timers():
    # a:2 and a:5 are observably different bindings; a:2 twice is one
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2), (a, 5)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    assert len(find_instances(cfg, [E1])) == 2
    cfg2 = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2), (a, 2)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    assert len(find_instances(cfg2, [E1])) == 1


# ---------------------------------------------------------------------------
# Choices

def test_maximal_choices_s1_is_forced():
    choices = maximal_choices(s1(), [E1])
    assert len(choices) == 1
    assert len(choices[0]) == 1


def test_step_choices_allow_finite_objects_to_sit_out():
    choices = step_choices(s1(), [E1])
    assert sorted(len(ch) for ch in choices) == [0, 1]


def test_infinite_timer_objects_cannot_refuse():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", INF, [(a, INF)]), mem("m", INF, [(a.dual(), INF)]),
    ]))
    assert len(step_choices(cfg, [E1])) == 1  # the move is forced


def test_shared_passive_membrane():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2)]),
        mem("h", 3, [(a, 2)]),
        mem("m", INF, [(a.dual(), 4), (a.dual(), 4)]),
    ]))
    choices = maximal_choices(cfg, [E1])
    assert len(choices) == 1
    assert len(choices[0]) == 2  # both enter, m is shared passively
    result = apply_step(cfg, choices[0])
    assert canonicalize(result) == \
        "skin:inf{}[m:inf{}[h:2{c:7}[] h:2{c:7}[]]]|out=skin"


def test_empty_choice_when_nothing_applies():
    cfg = Configuration(mem("skin", INF, [(a, 3)]))
    assert maximal_choices(cfg, [E1]) == [()]
    assert step_choices(cfg, [E1]) == [()]


def test_membrane_cannot_be_active_and_passive_at_once():
    # mutual entry h->m and m->h would be cyclic; only one fires per step
    r1 = EndoRule("h", "m", Multiset([a]), name="r1")
    r2 = EndoRule("m", "h", Multiset([b]), name="r2")
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2), (b.dual(), 2)]),
        mem("m", 3, [(a.dual(), 2), (b, 2)]),
    ]))
    for choice in step_choices(cfg, [r1, r2]):
        assert len(choice) <= 1


# ---------------------------------------------------------------------------
# Step application (frozen worked examples)

def test_apply_endo_s1():
    cfg = s1()
    (choice,) = maximal_choices(cfg, [E1])
    result = apply_step(cfg, choice)
    assert canonicalize(result) == "skin:inf{}[m:inf{}[h:2{b:4,c:7}[]]]|out=skin"


def test_stall_branch_ticks_everything():
    cfg = s1()
    empty = [ch for ch in step_choices(cfg, [E1]) if not ch][0]
    result = apply_step(cfg, empty)
    assert canonicalize(result) == \
        "skin:inf{}[h:2{a:1,b:4}[] m:inf{~a:3}[]]|out=skin"


def test_dissolution_and_expiry_sequence():
    s2 = Configuration(mem("skin", INF, [], [mem("h", 0, [(a, 1)])]))
    step1 = apply_step(s2, ())
    assert canonicalize(step1) == "skin:inf{a:0}[]|out=skin"
    step2 = apply_step(step1, ())
    assert canonicalize(step2) == "skin:inf{}[]|out=skin"


def test_carry_and_context_objects():
    rule = EndoRule(
        "h", "m",
        u=Multiset([a]), v=Multiset([b]), v2=Multiset([x]),
        w=((c, Fresh(7)), (b, Carry(1))),
        w2=((x, Carry(1)),),
        name="R",
    )
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 5, [(a, 2), (b, 3)]), mem("m", 4, [(a.dual(), 6), (x, 9)]),
    ]))
    (choice,) = maximal_choices(cfg, [rule])
    result = apply_step(cfg, choice)
    assert canonicalize(result) == \
        "skin:inf{}[m:3{x:8}[h:4{b:2,c:7}[]]]|out=skin"


def test_exo_basic():
    rule = ExoRule("h", "m", Multiset([a]), w=((c, Fresh(7)),), w2=((d, Fresh(1)),), name="X")
    cfg = Configuration(mem("skin", INF, [], [
        mem("m", 5, [(a.dual(), 2)], [mem("h", 3, [(a, 1)])]),
    ]))
    (choice,) = maximal_choices(cfg, [rule])
    result = apply_step(cfg, choice)
    assert canonicalize(result) == "skin:inf{}[h:2{c:7}[] m:4{d:1}[]]|out=skin"


def test_exo_through_skin_detaches_and_archives():
    rule = ExoRule("h", "skin", Multiset([a]), w2=((d, Fresh(2)),), name="X")
    cfg = Configuration(mem("skin", INF, [(a.dual(), 2)], [mem("h", 3, [(a, 1)])]))
    (choice,) = maximal_choices(cfg, [rule])
    result = step(cfg, choice)
    # the passive-side product lands in the skin; the mover is archived
    assert canonicalize(result.config) == "skin:inf{d:2}[]|out=skin"
    assert len(result.detached) == 1
    assert result.detached[0][1] == "h"


def test_endo_between_same_labelled_siblings():
    # labels need not be unique: one h-membrane may enter another
    rule = EndoRule("h", "h", Multiset([a]), name="self")
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 4, [(a, 2)]), mem("h", 4, [(a.dual(), 2)]),
    ]))
    (choice,) = maximal_choices(cfg, [rule])
    result = apply_step(cfg, choice)
    assert canonicalize(result) == "skin:inf{}[h:3{}[h:3{}[]]]|out=skin"


def test_rewrite_fires_inside_a_moving_membrane():
    # a rewrite host is not an "involved" membrane: contents rewrite and
    # move in the same step
    move = EndoRule("h", "m", Multiset([a]), name="e")
    tick = RewriteRule("h", Multiset([x]), ((y, Fresh(9)),), name="w")
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2), (x, INF)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    both = [ch for ch in maximal_choices(cfg, [move, tick]) if len(ch) == 2]
    assert both
    result = apply_step(cfg, both[0])
    assert canonicalize(result) == "skin:inf{}[m:inf{}[h:2{y:9}[]]]|out=skin"


def test_rewrite_fires_inside_a_dissolving_membrane():
    rule = RewriteRule("k", Multiset([x]), ((y, Fresh(5)),), name="w")
    cfg = Configuration(mem("skin", INF, [], [mem("k", 0, [(x, INF)])]))
    (choice,) = maximal_choices(cfg, [rule])
    assert len(choice) == 1
    result = apply_step(cfg, choice)
    # the rewrite applies, then the expired membrane spills its output
    assert canonicalize(result) == "skin:inf{y:5}[]|out=skin"


def test_rule_made_marker_dissolves_host():
    rule = RewriteRule("k", Multiset([p]), ((DELTA, Fresh(INF)),), name="D")
    cfg = Configuration(mem("skin", INF, [], [mem("k", 9, [(p, INF), (y, INF)])]))
    (choice,) = maximal_choices(cfg, [rule])
    result = apply_step(cfg, choice)
    assert canonicalize(result) == "skin:inf{y:inf}[]|out=skin"


def test_dissolution_cascades_bottom_up():
    cfg = Configuration(mem("skin", INF, [], [
        mem("k1", 0, [], [mem("k2", 0, [(y, 5)])]),
    ]))
    result = apply_step(cfg, ())
    assert canonicalize(result) == "skin:inf{y:4}[]|out=skin"


def test_inf_system_is_a_fixpoint():
    cfg = Configuration(mem("skin", INF, [(a, INF)]))
    assert canonicalize(apply_step(cfg, ())) == canonicalize(cfg)


def test_stale_choice_rejected():
    cfg = s1()
    (choice,) = maximal_choices(cfg, [E1])
    other = Configuration(mem("skin", INF, [], [mem("h", 3, [(a, 2)])]))
    with pytest.raises(StaleChoiceError):
        apply_step(other, choice)
    aged = apply_step(cfg, [ch for ch in step_choices(cfg, [E1]) if not ch][0])
    with pytest.raises(StaleChoiceError):
        apply_step(aged, choice)  # bindings name timers that moved on


# ---------------------------------------------------------------------------
# Successors, runs, audits

def test_successors_dedup_equivalent_bindings():
    cfg = Configuration(mem("skin", INF, [], [
        mem("h", 3, [(a, 2), (a, 2)]), mem("m", INF, [(a.dual(), 4)]),
    ]))
    succ = successors(cfg, [E1])
    moves = [ch for ch, _cfg in succ if ch]
    assert len(moves) == 1


def test_successors_s1():
    succ = successors(s1(), [E1])
    assert keys(succ) == [
        "skin:inf{}[h:2{a:1,b:4}[] m:inf{~a:3}[]]|out=skin",
        "skin:inf{}[m:inf{}[h:2{b:4,c:7}[]]]|out=skin",
    ]


def test_halted_self_loop_successor():
    cfg = Configuration(mem("skin", INF, [(a, INF)]))
    succ = successors(cfg, [E1])
    assert len(succ) == 1
    assert canonicalize(succ[0][1]) == canonicalize(cfg)


def test_run_zero_steps():
    cfg = s1()
    trace = run(cfg, [E1], 0)
    assert trace.records == []
    assert trace.configs == [cfg]


def test_run_executes_the_forced_endo():
    trace = run(s1(), [E1], 1, selector="random", seed=42)
    assert trace.records[-1].key == "skin:inf{}[m:inf{}[h:2{b:4,c:7}[]]]|out=skin"


def test_run_halts_on_fixpoint():
    cfg = Configuration(mem("skin", INF, [(a, INF)]))
    trace = run(cfg, [], 10)
    assert trace.halted
    assert len(trace.records) == 1


def test_equal_seeds_equal_traces():
    cfg, rules = random_soak_system(3)
    t1 = run(cfg, rules, 20, selector="random", seed=5)
    t2 = run(cfg, rules, 20, selector="random", seed=5)
    assert t1.to_jsonl() == t2.to_jsonl()


def test_maximality_audit_on_soak():
    cfg, rules = random_soak_system(1)
    trace = run(cfg, rules, 25, selector="random", seed=9)
    for idx, record in enumerate(trace.records):
        assert residual_instances(trace.configs[idx], record.choice, rules) == []


def _object_count(cfg):
    return sum(
        n for node in cfg.skin.walk()
        for (sym, _t), n in node.content.items()
        if sym.name != "delta"
    )


def test_conservation_bookkeeping():
    for seed in range(8):
        cfg, rules = random_timed_system(seed)
        for choice in step_choices(cfg, rules):
            result = step(cfg, choice)
            produced = sum(
                sum(1 for sym, _s in inst.rule.w + inst.rule.w2 if sym.name != "delta")
                if inst.is_move else
                sum(1 for sym, _s in inst.rule.rhs if sym.name != "delta")
                for inst in choice
            )
            consumed = sum(
                len(inst.active_classes) + len(inst.passive_classes) for inst in choice
            )
            expect = (_object_count(cfg) + produced - consumed
                      - result.stats.expired - result.stats.detached_objects)
            assert _object_count(result.config) == expect


def test_tree_shape_and_skin_preserved():
    for seed in range(8):
        cfg, rules = random_timed_system(seed)
        for _choice, nxt in successors(cfg, rules):
            uids = [node.uid for node in nxt.skin.walk()]
            assert len(uids) == len(set(uids))
            assert nxt.skin.uid == cfg.skin.uid
            assert nxt.skin.timer == INF


# ---------------------------------------------------------------------------
# Independent oracle

def test_against_reference_interpreter():
    for seed in range(15):
        cfg, rules = random_timed_system(seed)
        want = ref.successor_renders(ref.from_config(cfg), rules)
        got = {ref.render(ref.from_config(nxt)) for _ch, nxt in successors(cfg, rules)}
        assert want == got, f"seed {seed}"


def test_reference_agrees_on_worked_example():
    want = ref.successor_renders(ref.from_config(s1()), [E1])
    got = {ref.render(ref.from_config(nxt)) for _ch, nxt in successors(s1(), [E1])}
    assert want == got
