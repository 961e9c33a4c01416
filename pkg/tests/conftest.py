"""Shared helpers: fixture paths, random instance builders, witness checks."""

from __future__ import annotations

import random
from collections import defaultdict
from pathlib import Path

import pytest

from chanlin import (
    INF,
    Event,
    Instance,
    Ok,
    Verdict,
    check_well_formed,
    derive_abstract,
    make_instance,
)

FIXTURES = Path(__file__).resolve().parent.parent / "instances"

CAP_MENU = (0.0, 1.0, 2.0, INF)


def rand_instance(rng: random.Random, with_rf: bool, n_max: int = 8) -> Instance:
    """An arbitrary (not necessarily consistent) small instance.

    Valued events when ``with_rf`` is false; valueless events plus a random
    injective reads-from otherwise.
    """
    t = rng.randint(1, 3)
    m = rng.randint(1, 3)
    n = rng.randint(0, n_max)
    cap = {f"ch{i}": rng.choice(CAP_MENU) for i in range(1, m + 1)}
    events = []
    for i in range(1, n + 1):
        events.append(
            Event(
                id=i,
                thread=f"t{rng.randint(1, t)}",
                op=rng.choice(["snd", "rcv"]),
                channel=f"ch{rng.randint(1, m)}",
                value=None if with_rf else str(rng.randint(1, 3)),
            )
        )
    rf = None
    if with_rf:
        snds: dict[str, list[int]] = defaultdict(list)
        rcvs: dict[str, list[int]] = defaultdict(list)
        for e in events:
            (snds if e.op == "snd" else rcvs)[e.channel].append(e.id)
        pairs = []
        for ch, ss in snds.items():
            ss = ss[:]
            rr = rcvs.get(ch, [])[:]
            rng.shuffle(ss)
            rng.shuffle(rr)
            for s, r in zip(ss, rr):
                if rng.random() < 0.9:
                    pairs.append((s, r))
        rf = tuple(sorted(pairs))
    return make_instance("abstract", events, cap, rf)


def assert_valid_witness(inst: Instance, verdict: Verdict) -> None:
    """The witness must be a po-respecting well-formed trace matching rf."""
    assert verdict.consistent and verdict.witness is not None
    x = inst.abstract
    assert sorted(verdict.witness) == sorted(e.id for e in x.events)
    trace = [x.by_id[i] for i in verdict.witness]
    seen: dict[str, list[int]] = defaultdict(list)
    for e in trace:
        seen[e.thread].append(e.id)
    for th, seq in x.po.items():
        assert tuple(seen[th]) == seq, f"program order broken in thread {th}"
    assert isinstance(check_well_formed(trace, inst.cap_map), Ok)
    if inst.rf is not None:
        _, derived = derive_abstract(trace)
        assert set(derived) == set(inst.rf)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES
