"""Saturated order: agreement with a naive fixpoint oracle and pruning power."""

from __future__ import annotations

import random
from collections import defaultdict

from chanlin import (
    ChannelClass,
    Event,
    classify_channels,
    make_instance,
    ready,
    saturate,
    solve_vchrf_saturated,
)
from .conftest import rand_instance


def naive_saturation(x, cap, rf):
    """Reference fixpoint over an explicit pair set; returns (cyclic, pairs)."""
    ids = [e.id for e in x.events]
    by_id = x.by_id
    classes = classify_channels(x, cap)
    rel: set[tuple[int, int]] = set()
    for seq in x.po.values():
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                rel.add((seq[i], seq[j]))
    rel.update(rf)
    pairs_by_ch: dict[str, list[tuple[int, int]]] = defaultdict(list)
    sends_by_ch: dict[str, list[int]] = defaultdict(list)
    matched = {s for s, _ in rf}
    for e in x.events:
        if e.op == "snd":
            sends_by_ch[e.channel].append(e.id)
    for s, r in rf:
        pairs_by_ch[by_id[s].channel].append((s, r))
    for ch, sends in sends_by_ch.items():
        for m in sends:
            if m in matched:
                for u in sends:
                    if u not in matched:
                        rel.add((m, u))
    changed = True
    while changed:
        changed = False
        # Transitive closure.
        for a, b in list(rel):
            for c, d in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
        for ch, table in pairs_by_ch.items():
            for s1, r1 in table:
                for s2, r2 in table:
                    if s1 == s2:
                        continue
                    if (s1, s2) in rel and (r1, r2) not in rel:
                        rel.add((r1, r2))
                        changed = True
                    if (r1, r2) in rel and (s1, s2) not in rel:
                        rel.add((s1, s2))
                        changed = True
            if classes[ch].kind == ChannelClass.SYNC:
                for s, r in table:
                    for e in ids:
                        if e in (s, r):
                            continue
                        if (e, r) in rel and (e, s) not in rel:
                            rel.add((e, s))
                            changed = True
                        if (e, s) in rel and (e, r) not in rel:
                            rel.add((e, r))
                            changed = True
                        if (s, e) in rel and (r, e) not in rel:
                            rel.add((r, e))
                            changed = True
                        if (r, e) in rel and (s, e) not in rel:
                            rel.add((s, e))
                            changed = True
            if classes[ch].kind == ChannelClass.BOUNDED and classes[ch].bound == 1:
                for s1, r1 in table:
                    for s2 in sends_by_ch[ch]:
                        if s2 != s1 and (s1, s2) in rel and (r1, s2) not in rel:
                            rel.add((r1, s2))
                            changed = True
    cyclic = any((e, e) in rel for e in ids)
    return cyclic, rel


class TestAgainstNaiveFixpoint:
    def test_random_instances(self):
        rng = random.Random(7)
        for _ in range(120):
            inst = rand_instance(rng, with_rf=True, n_max=7)
            x, cap, rf = inst.abstract, inst.cap_map, inst.rf
            order = saturate(x, cap, rf)
            cyclic, rel = naive_saturation(x, cap, rf)
            assert order.cyclic == cyclic
            if cyclic:
                continue
            for e in x.by_id:
                for f in x.by_id:
                    if e != f:
                        assert order.query(e, f) == ((e, f) in rel), (e, f)

    def test_pred_counts_match_predecessor_sets(self):
        rng = random.Random(8)
        for _ in range(60):
            inst = rand_instance(rng, with_rf=True, n_max=7)
            x, cap, rf = inst.abstract, inst.cap_map, inst.rf
            order = saturate(x, cap, rf)
            cyclic, rel = naive_saturation(x, cap, rf)
            if cyclic:
                continue
            tidx = {th: i for i, th in enumerate(order.threads)}
            for e in x.by_id:
                need = order.pred_counts[order.index[e]]
                for th, seq in x.po.items():
                    preds = sum(1 for f in seq if (f, e) in rel)
                    assert need[tidx[th]] == preds, (e, th)


class TestReady:
    def test_ready_gates_on_predecessors(self):
        # Synchronous pair: the receive is ready only after the send's thread
        # has executed the send.
        events = [
            Event(1, "t1", "snd", "c"),
            Event(2, "t2", "rcv", "c"),
        ]
        inst = make_instance("abstract", events, {"c": 0.0}, [(1, 2)])
        order = saturate(inst.abstract, inst.cap_map, inst.rf)
        assert not order.cyclic
        assert ready(1, (0, 0), order)
        assert not ready(2, (0, 0), order)
        assert ready(2, (1, 0), order)


class TestPipelinePruning:
    def test_handshake_pipeline_linear_exploration(self):
        n_pairs = 2000
        events, rf, cap = [], [], {}
        eid = 1
        for i in range(n_pairs):
            ch = f"s{i}"
            cap[ch] = 0.0
            events.append(Event(eid, "t1", "snd", ch))
            events.append(Event(eid + 1, "t2", "rcv", ch))
            rf.append((eid, eid + 1))
            eid += 2
        inst = make_instance("abstract", events, cap, rf)
        v = solve_vchrf_saturated(inst.abstract, inst.cap_map, inst.rf)
        assert v.consistent
        assert v.explored == inst.n + 1
