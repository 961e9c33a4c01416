"""SMT-LIB emission of VCh-rf consistency as quantifier-free linear arithmetic.

Every event gets an integer position variable ``x_<id>`` in ``[0, n-1]``;
every channel gets prefix counters ``y_<ch>_snd_<i>`` / ``y_<ch>_rcv_<i>``
for ``0 <= i <= n``.  The assertions say positions are distinct, respect
program order and reads-from (synchronous pairs are adjacent), matched pairs
obey FIFO, matched sends precede unmatched ones, and every prefix satisfies
the capacity sandwich ``y_rcv <= y_snd <= y_rcv + cap``.  The formula is
satisfiable iff the instance is consistent.

Optionally the saturated order strengthens the formula with derived ``<``
constraints; a saturation cycle collapses it to ``(assert false)``.
"""

from __future__ import annotations

import shlex
import subprocess
from typing import Mapping, Sequence

from .core import INF, RCV, SND, AbstractExecution, format_cap
from .saturation import saturate

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


class SolverError(Exception):
    """External solver failed; ``output`` carries captured stdout/stderr."""

    def __init__(self, message: str, output: str = ""):
        super().__init__(message)
        self.output = output


def emit_smtlib(
    x: AbstractExecution,
    cap: Mapping[str, float],
    rf: Sequence[tuple[int, int]],
    with_saturation: bool = False,
) -> str:
    """Emit SMT-LIB v2 text; see the module docstring for the encoding."""
    n = x.n
    channels = sorted(cap)
    by_id = x.by_id
    lines: list[str] = ["(set-logic QF_LIA)"]

    event_ids = [e.id for e in x.events]
    for eid in event_ids:
        lines.append(f"(declare-const x_{eid} Int)")
    for ch in channels:
        for i in range(n + 1):
            lines.append(f"(declare-const y_{ch}_snd_{i} Int)")
            lines.append(f"(declare-const y_{ch}_rcv_{i} Int)")

    # Position uniqueness and bounds.
    for eid in event_ids:
        lines.append(f"(assert (and (<= 0 x_{eid}) (<= x_{eid} {n - 1})))")
    if n >= 2:
        lines.append("(assert (distinct " + " ".join(f"x_{e}" for e in event_ids) + "))")

    # Program order and reads-from.
    for th in x.threads:
        seq = x.po[th]
        for p in range(len(seq) - 1):
            lines.append(f"(assert (< x_{seq[p]} x_{seq[p + 1]}))")
    for s, r in sorted(rf):
        if cap[by_id[s].channel] == 0:
            lines.append(f"(assert (= (+ x_{s} 1) x_{r}))")
        else:
            lines.append(f"(assert (< x_{s} x_{r}))")

    # FIFO between matched pairs; matched sends precede unmatched sends.
    matched = {s for s, _ in rf}
    pairs_by_ch: dict[str, list[tuple[int, int]]] = {}
    sends_by_ch: dict[str, list[int]] = {ch: [] for ch in channels}
    rcvs_by_ch: dict[str, list[int]] = {ch: [] for ch in channels}
    for e in x.events:
        (sends_by_ch if e.op == SND else rcvs_by_ch)[e.channel].append(e.id)
    for s, r in sorted(rf):
        pairs_by_ch.setdefault(by_id[s].channel, []).append((s, r))
    for ch in channels:
        table = pairs_by_ch.get(ch, [])
        for i, (s, r) in enumerate(table):
            for s2, r2 in table[i + 1 :]:
                lines.append(f"(assert (= (< x_{s} x_{s2}) (< x_{r} x_{r2})))")
        unmatched = [s for s in sends_by_ch[ch] if s not in matched]
        for s in sends_by_ch[ch]:
            if s in matched:
                for u in unmatched:
                    lines.append(f"(assert (< x_{s} x_{u}))")

    # Prefix counters and capacity sandwich.
    for ch in channels:
        lines.append(f"(assert (= y_{ch}_snd_0 0))")
        lines.append(f"(assert (= y_{ch}_rcv_0 0))")
        for op, members in ((SND, sends_by_ch[ch]), (RCV, rcvs_by_ch[ch])):
            for i in range(n):
                terms = [f"(ite (= x_{e} {i}) 1 0)" for e in members]
                if terms:
                    total = f"(+ y_{ch}_{op}_{i} " + " ".join(terms) + ")"
                else:
                    total = f"y_{ch}_{op}_{i}"
                lines.append(f"(assert (= y_{ch}_{op}_{i + 1} {total}))")
        c = cap[ch]
        for i in range(n + 1):
            lines.append(f"(assert (<= y_{ch}_rcv_{i} y_{ch}_snd_{i}))")
            if c != INF:
                lines.append(
                    f"(assert (<= y_{ch}_snd_{i} (+ y_{ch}_rcv_{i} {format_cap(c)})))"
                )

    if with_saturation:
        order = saturate(x, cap, tuple(rf))
        if order.cyclic:
            lines.append("; saturated order contains a cycle")
            lines.append("(assert false)")
        else:
            seqs = {ti: x.po[th] for ti, th in enumerate(order.threads)}
            for eid in event_ids:
                row = order.succ[order.index[eid]]
                for ti, p in enumerate(row):
                    if p < len(seqs[ti]):
                        lines.append(f"(assert (< x_{eid} x_{seqs[ti][p]}))")

    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def run_external_solver(encoding_path: str, solver_command: str) -> str:
    """Run a solver on an emitted file; return ``sat``/``unsat``/``unknown``.

    ``solver_command`` is a shell-style template; an ``{input}`` token is
    replaced by the file path, otherwise the path is appended.
    """
    argv = shlex.split(solver_command)
    if "{input}" in argv:
        argv = [encoding_path if a == "{input}" else a for a in argv]
    else:
        argv = argv + [encoding_path]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=300)
    except (OSError, subprocess.SubprocessError) as exc:
        raise SolverError(f"solver invocation failed: {exc}") from exc
    output = proc.stdout + proc.stderr
    for token in output.split():
        if token in (SAT, UNSAT, UNKNOWN):
            return token
    raise SolverError(
        f"no sat/unsat/unknown in solver output (exit {proc.returncode})", output
    )
