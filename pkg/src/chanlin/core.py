"""Domain model and instance file format for FIFO-channel consistency checking.

An *instance* bundles a set of send/receive events over named channels with a
per-channel capacity map, and optionally a reads-from relation pairing sends
with the receives that observe them.  Instances come in two kinds:

* ``abstract`` — events carry only a per-thread order (program order); the
  solvers decide whether some interleaving (a *concretization*) exists.
* ``trace`` — events carry a global total order; the trace can be checked for
  well-formedness directly and abstracted back into an instance.

The text format is line-oriented (see :func:`parse_instance`) and
byte-deterministic under :func:`serialize_instance`.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

#: Capacity mark for channels that never block ("inf" in the file format).
INF: float = math.inf

SND = "snd"
RCV = "rcv"

RfPairs = tuple[tuple[int, int], ...]


class ParseError(ValueError):
    """Raised on malformed instance text; message includes the line number."""


class ValidationError(ValueError):
    """Raised when a structurally parsed instance violates an invariant."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    """One send or receive: ``⟨id, thread, op(channel, value)⟩``."""

    id: int
    thread: str
    op: str  # SND or RCV
    channel: str
    value: str | None = None


@dataclass(frozen=True)
class AbstractExecution:
    """An event set plus per-thread total orders (program order).

    ``events`` is kept in canonical order: threads sorted by token, events of
    each thread in program order.
    """

    events: tuple[Event, ...]

    @cached_property
    def by_id(self) -> dict[int, Event]:
        return {e.id: e for e in self.events}

    @cached_property
    def po(self) -> dict[str, tuple[int, ...]]:
        seqs: dict[str, list[int]] = defaultdict(list)
        for e in self.events:
            seqs[e.thread].append(e.id)
        return {t: tuple(ids) for t, ids in seqs.items()}

    @cached_property
    def threads(self) -> tuple[str, ...]:
        return tuple(sorted(self.po))

    @cached_property
    def channels(self) -> tuple[str, ...]:
        return tuple(sorted({e.channel for e in self.events}))

    @property
    def n(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class ChannelClass:
    """Sync | Bounded(c) | EffectivelyUnbounded, per instance send counts."""

    kind: str  # "sync" | "bounded" | "unbounded"
    bound: int | None = None

    SYNC = "sync"
    BOUNDED = "bounded"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Topology:
    """Undirected thread graph: an edge joins threads sharing a channel."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    acyclic: bool
    private_channels: tuple[tuple[str, str], ...]  # (channel, sole thread)


@dataclass(frozen=True)
class Ok:
    """Result of a successful well-formedness check."""


@dataclass(frozen=True)
class Violation:
    """First well-formedness failure: ``kind`` and 1-based event position."""

    kind: str  # "capacity" | "sync" | "value"
    position: int


OK = Ok()

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a consistency check.

    ``witness`` is a tuple of event ids (a concretization) present iff
    consistent; ``explored`` counts distinct search states visited (0 for
    non-search algorithms and early rejections); ``reason`` documents
    inconsistency verdicts produced by validation short-circuits.
    """

    outcome: str  # CONSISTENT | INCONSISTENT
    witness: tuple[int, ...] | None = None
    explored: int = 0
    reason: str | None = None

    @property
    def consistent(self) -> bool:
        return self.outcome == CONSISTENT


class AlgorithmRefused(Exception):
    """A special-case solver refused an instance outside its preconditions."""


@dataclass(frozen=True)
class Instance:
    """A parsed instance file: events, capacities, and optional reads-from.

    Events are stored canonically: trace order for ``kind == "trace"``,
    (thread token, program order) for ``kind == "abstract"``.  ``cap`` is a
    sorted tuple of (channel, capacity); ``rf`` is a sorted tuple of
    (send id, receive id) pairs or ``None`` when the file has no rf lines.
    """

    kind: str  # "abstract" | "trace"
    events: tuple[Event, ...]
    cap: tuple[tuple[str, float], ...]
    rf: RfPairs | None

    @cached_property
    def cap_map(self) -> dict[str, float]:
        return dict(self.cap)

    @cached_property
    def by_id(self) -> dict[int, Event]:
        return {e.id: e for e in self.events}

    @cached_property
    def abstract(self) -> AbstractExecution:
        return AbstractExecution(events=_canonical_abstract_order(self.events))

    @property
    def trace_events(self) -> tuple[Event, ...]:
        if self.kind != "trace":
            raise ValueError("not a trace instance")
        return self.events

    @property
    def n(self) -> int:
        return len(self.events)


def rf_by_rcv(rf: Iterable[tuple[int, int]]) -> dict[int, int]:
    """Map receive id -> send id."""
    return {r: s for s, r in rf}


def rf_by_snd(rf: Iterable[tuple[int, int]]) -> dict[int, int]:
    """Map send id -> receive id."""
    return {s: r for s, r in rf}


# ---------------------------------------------------------------------------
# Instance construction and validation
# ---------------------------------------------------------------------------


def _canonical_abstract_order(events: Iterable[Event]) -> tuple[Event, ...]:
    """Order events by (thread token, original per-thread order)."""
    per_thread: dict[str, list[Event]] = defaultdict(list)
    for e in events:
        per_thread[e.thread].append(e)
    out: list[Event] = []
    for t in sorted(per_thread):
        out.extend(per_thread[t])
    return tuple(out)


def make_instance(
    kind: str,
    events: Sequence[Event],
    cap: Mapping[str, float],
    rf: Iterable[tuple[int, int]] | None = None,
) -> Instance:
    """Canonicalize and validate an instance built in memory."""
    if kind not in ("abstract", "trace"):
        raise ValidationError(f"unknown kind {kind!r}")
    evs = tuple(events) if kind == "trace" else _canonical_abstract_order(events)
    inst = Instance(
        kind=kind,
        events=evs,
        cap=tuple(sorted(cap.items())),
        rf=None if rf is None else tuple(sorted(rf)),
    )
    validate_instance(inst)
    return inst


def validate_instance(inst: Instance) -> None:
    """Check structural invariants; raise :class:`ValidationError` on failure."""
    seen: set[int] = set()
    for e in inst.events:
        if e.id in seen:
            raise ValidationError(f"duplicate event id {e.id}")
        seen.add(e.id)
        if e.op not in (SND, RCV):
            raise ValidationError(f"event {e.id}: bad op {e.op!r}")
        if e.id < 0:
            raise ValidationError(f"event {e.id}: negative id")
        if e.channel not in inst.cap_map:
            raise ValidationError(f"event {e.id}: channel {e.channel!r} has no capacity entry")
    for ch, c in inst.cap:
        if c != INF and (c != int(c) or c < 0):
            raise ValidationError(f"channel {ch!r}: bad capacity {c!r}")
    if inst.rf is not None:
        _validate_rf(inst)


def _validate_rf(inst: Instance) -> None:
    by_id = inst.by_id
    snds: set[int] = set()
    rcvs: set[int] = set()
    for s, r in inst.rf or ():
        if s not in by_id or r not in by_id:
            raise ValidationError(f"rf ({s},{r}): endpoint missing")
        es, er = by_id[s], by_id[r]
        if es.op != SND or er.op != RCV:
            raise ValidationError(f"rf ({s},{r}): rf endpoint op mismatch")
        if es.channel != er.channel:
            raise ValidationError(f"rf ({s},{r}): endpoints on different channels")
        if s in snds or r in rcvs:
            raise ValidationError(f"rf ({s},{r}): rf is not injective")
        snds.add(s)
        rcvs.add(r)
        if es.value is not None and er.value is not None and es.value != er.value:
            raise ValidationError(f"rf ({s},{r}): matched events carry different values")


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format.

    Grammar (tokens whitespace-separated, ``#`` starts a comment)::

        vchk v1
        kind abstract|trace
        channel <name> cap <nat>|inf
        event <id> <thread> snd|rcv <channel> [<value>]
        rf <send-id> <rcv-id>

    For ``kind abstract`` the per-thread line order is program order; for
    ``kind trace`` the global line order is the trace order.
    """
    kind: str | None = None
    cap: dict[str, float] = {}
    events: list[Event] = []
    rf: list[tuple[int, int]] | None = None
    seen_ids: set[int] = set()
    header_seen = False

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not header_seen:
            if tokens != ["vchk", "v1"]:
                raise ParseError(f"line {ln}: expected header 'vchk v1'")
            header_seen = True
            continue
        directive = tokens[0]
        if directive == "kind":
            if len(tokens) != 2 or tokens[1] not in ("abstract", "trace"):
                raise ParseError(f"line {ln}: bad kind directive")
            kind = tokens[1]
        elif directive == "channel":
            if len(tokens) != 4 or tokens[2] != "cap":
                raise ParseError(f"line {ln}: bad channel directive")
            name = tokens[1]
            if name in cap:
                raise ParseError(f"line {ln}: duplicate channel {name!r}")
            cap[name] = _parse_cap(tokens[3], ln)
        elif directive == "event":
            if len(tokens) not in (5, 6):
                raise ParseError(f"line {ln}: bad event directive")
            try:
                eid = int(tokens[1])
            except ValueError:
                raise ParseError(f"line {ln}: bad event id {tokens[1]!r}") from None
            if eid < 0:
                raise ParseError(f"line {ln}: negative event id")
            if eid in seen_ids:
                raise ParseError(f"line {ln}: duplicate event id {eid}")
            seen_ids.add(eid)
            if tokens[3] not in (SND, RCV):
                raise ParseError(f"line {ln}: bad op {tokens[3]!r}")
            if tokens[4] not in cap:
                raise ParseError(f"line {ln}: channel {tokens[4]!r} has no capacity line")
            events.append(
                Event(
                    id=eid,
                    thread=tokens[2],
                    op=tokens[3],
                    channel=tokens[4],
                    value=tokens[5] if len(tokens) == 6 else None,
                )
            )
        elif directive == "rf":
            # A bare "rf" line declares reads-from mode with no pairs, which
            # distinguishes an empty relation from an absent one.
            if len(tokens) == 1:
                if rf is None:
                    rf = []
                continue
            if len(tokens) != 3:
                raise ParseError(f"line {ln}: bad rf directive")
            try:
                pair = (int(tokens[1]), int(tokens[2]))
            except ValueError:
                raise ParseError(f"line {ln}: bad rf ids") from None
            if rf is None:
                rf = []
            rf.append(pair)
        else:
            raise ParseError(f"line {ln}: unknown directive {directive!r}")

    if not header_seen:
        raise ParseError("line 1: expected header 'vchk v1'")
    if kind is None:
        raise ParseError("missing 'kind' directive")
    try:
        return make_instance(kind, events, cap, rf)
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc


def _parse_cap(token: str, ln: int) -> float:
    if token == "inf":
        return INF
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"line {ln}: bad capacity {token!r}") from None
    if value < 0:
        raise ParseError(f"line {ln}: negative capacity")
    return float(value)


def format_cap(c: float) -> str:
    return "inf" if c == INF else str(int(c))


def serialize_instance(inst: Instance) -> str:
    """Emit the canonical text form; byte-deterministic for equal instances."""
    lines = ["vchk v1", f"kind {inst.kind}"]
    for ch, c in inst.cap:
        lines.append(f"channel {ch} cap {format_cap(c)}")
    for e in inst.events:
        parts = ["event", str(e.id), e.thread, e.op, e.channel]
        if e.value is not None:
            parts.append(e.value)
        lines.append(" ".join(parts))
    if inst.rf is not None:
        if not inst.rf:
            lines.append("rf")
        for s, r in inst.rf:
            lines.append(f"rf {s} {r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Well-formedness of traces
# ---------------------------------------------------------------------------


def _values_match(a: Event, b: Event) -> bool:
    if a.value is None or b.value is None:
        return True
    return a.value == b.value


def check_well_formed(trace: Sequence[Event], cap: Mapping[str, float]) -> Ok | Violation:
    """Check a trace in one left-to-right pass; first violation wins.

    Checks, per event position (1-based):

    * capacity — every prefix keeps ``#rcv <= #snd <= #rcv + cap`` per
      asynchronous channel;
    * sync — a capacity-0 send is immediately followed by a matching-value
      receive on the same channel from a different thread (and symmetrically
      for receives);
    * value — the i-th receive on a channel observes the i-th send's value.
    """
    queues: dict[str, deque[Event]] = defaultdict(deque)
    n = len(trace)
    for i, e in enumerate(trace):
        pos = i + 1
        c = cap[e.channel]
        if c == 0:
            if e.op == SND:
                nxt = trace[i + 1] if i + 1 < n else None
                if (
                    nxt is None
                    or nxt.op != RCV
                    or nxt.channel != e.channel
                    or nxt.thread == e.thread
                    or not _values_match(e, nxt)
                ):
                    return Violation("sync", pos)
            else:
                prv = trace[i - 1] if i > 0 else None
                if (
                    prv is None
                    or prv.op != SND
                    or prv.channel != e.channel
                    or prv.thread == e.thread
                    or not _values_match(prv, e)
                ):
                    return Violation("sync", pos)
        else:
            q = queues[e.channel]
            if e.op == SND:
                if len(q) >= c:
                    return Violation("capacity", pos)
                q.append(e)
            else:
                if not q:
                    return Violation("capacity", pos)
                front = q.popleft()
                if not _values_match(front, e):
                    return Violation("value", pos)
    return OK


def derive_abstract(trace: Sequence[Event]) -> tuple[AbstractExecution, RfPairs]:
    """Abstract a well-formed trace: per-thread po plus index-matched rf.

    The i-th send on each channel is paired with the i-th receive; excess
    sends remain unmatched.
    """
    sends: dict[str, list[int]] = defaultdict(list)
    rcvs: dict[str, list[int]] = defaultdict(list)
    for e in trace:
        (sends if e.op == SND else rcvs)[e.channel].append(e.id)
    rf: list[tuple[int, int]] = []
    for ch, ss in sends.items():
        rf.extend(zip(ss, rcvs.get(ch, [])))
    x = AbstractExecution(events=_canonical_abstract_order(trace))
    return x, tuple(sorted(rf))


# ---------------------------------------------------------------------------
# Channel classification and communication topology
# ---------------------------------------------------------------------------


def classify_channels(x: AbstractExecution, cap: Mapping[str, float]) -> dict[str, ChannelClass]:
    """Classify every channel of ``cap`` relative to the instance's sends."""
    send_counts: dict[str, int] = defaultdict(int)
    for e in x.events:
        if e.op == SND:
            send_counts[e.channel] += 1
    out: dict[str, ChannelClass] = {}
    for ch, c in cap.items():
        if c == 0:
            out[ch] = ChannelClass(ChannelClass.SYNC)
        elif c == INF or send_counts[ch] <= c:
            out[ch] = ChannelClass(ChannelClass.UNBOUNDED)
        else:
            out[ch] = ChannelClass(ChannelClass.BOUNDED, int(c))
    return out


def communication_topology(x: AbstractExecution) -> Topology:
    """Build the thread graph; an edge joins threads sharing a channel."""
    accessors: dict[str, set[str]] = defaultdict(set)
    for e in x.events:
        accessors[e.channel].add(e.thread)
    edges: set[tuple[str, str]] = set()
    private: list[tuple[str, str]] = []
    for ch in sorted(accessors):
        ts = sorted(accessors[ch])
        if len(ts) == 1:
            private.append((ch, ts[0]))
        else:
            for i in range(len(ts)):
                for j in range(i + 1, len(ts)):
                    edges.add((ts[i], ts[j]))
    nodes = x.threads
    # Union-find cycle detection on the simple undirected graph.
    parent = {t: t for t in nodes}

    def find(a: str) -> str:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    acyclic = True
    for u, v in sorted(edges):
        ru, rv = find(u), find(v)
        if ru == rv:
            acyclic = False
        else:
            parent[ru] = rv
    return Topology(
        nodes=nodes,
        edges=tuple(sorted(edges)),
        acyclic=acyclic,
        private_channels=tuple(private),
    )
