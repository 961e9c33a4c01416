"""Command-line interface: check, generate, mutate, emit-smt, stats.

Exit codes are the machine contract: 0 = consistent (or command succeeded),
1 = inconsistent (or trace violation), 2 = usage/validation error.  Stdout is
stable ``key: value`` lines.
"""

from __future__ import annotations

import os
import sys

import click

from .core import (
    INF,
    Instance,
    Ok,
    ParseError,
    ValidationError,
    Verdict,
    AlgorithmRefused,
    check_well_formed,
    classify_channels,
    communication_topology,
    format_cap,
    make_instance,
    parse_instance,
    serialize_instance,
)
from .fastpath import solve_acyclic, solve_sync
from .frontier import solve_vch, solve_vchrf, solve_vchrf_saturated
from .generators import (
    from_3sat_t3_m5,
    from_hamiltonian,
    from_one_in_three_two_threads,
    from_orthogonal_vectors,
    from_vsc_read,
    mutate_rf,
    parse_digraph,
    parse_dimacs,
    parse_ov,
    parse_vsc_read,
    random_positive,
)
from .oracle import brute_force
from .smt import SolverError, emit_smtlib, run_external_solver

ALGOS = ["auto", "frontier", "frontier-rf", "sync", "acyclic", "brute"]


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load(path: str) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _fail(str(exc))
    try:
        return parse_instance(text)
    except (ParseError, ValidationError) as exc:
        _fail(str(exc))
    raise AssertionError("unreachable")


def _dispatch(inst: Instance, algo: str, saturation: bool) -> tuple[Verdict, str]:
    x = inst.abstract
    cap = inst.cap_map
    rf = inst.rf
    if algo == "brute":
        return brute_force(x, cap, rf, bound=max(inst.n, 1)), "brute"
    if algo == "frontier":
        return solve_vch(x, cap), "frontier"
    if algo == "frontier-rf":
        if rf is None:
            raise ValueError("frontier-rf requires a reads-from relation")
        if saturation:
            return solve_vchrf_saturated(x, cap, rf), "frontier-rf-saturated"
        return solve_vchrf(x, cap, rf), "frontier-rf"
    if algo == "sync":
        if rf is None:
            raise ValueError("sync solver requires a reads-from relation")
        return solve_sync(x, cap, rf), "sync"
    if algo == "acyclic":
        if rf is None:
            raise ValueError("acyclic solver requires a reads-from relation")
        return solve_acyclic(x, cap, rf), "acyclic"
    # auto: fastest applicable algorithm, falling back to the frontier solvers.
    if rf is not None:
        if x.events and all(cap[e.channel] == 0 for e in x.events):
            try:
                return solve_sync(x, cap, rf), "sync"
            except AlgorithmRefused:
                pass
        try:
            return solve_acyclic(x, cap, rf), "acyclic"
        except AlgorithmRefused:
            pass
        if saturation:
            return solve_vchrf_saturated(x, cap, rf), "frontier-rf-saturated"
        return solve_vchrf(x, cap, rf), "frontier-rf"
    return solve_vch(x, cap), "frontier"


@click.group()
@click.version_option()
def main() -> None:
    """Consistency checking of message-passing executions over FIFO channels."""


@main.command()
@click.argument("input", type=click.Path())
@click.option("--algo", type=click.Choice(ALGOS), default="auto", show_default=True)
@click.option("--no-saturation", is_flag=True, help="Disable saturation pruning.")
@click.option("--witness", type=click.Path(), help="Write the witness trace here.")
def check(input: str, algo: str, no_saturation: bool, witness: str | None) -> None:
    """Decide consistency of an instance file (or well-formedness of a trace)."""
    inst = _load(input)
    if inst.kind == "trace":
        result = check_well_formed(inst.trace_events, inst.cap_map)
        if isinstance(result, Ok):
            click.echo("result: ok")
            sys.exit(0)
        click.echo("result: violation")
        click.echo(f"violation: {result.kind}")
        click.echo(f"position: {result.position}")
        sys.exit(1)
    try:
        verdict, used = _dispatch(inst, algo, saturation=not no_saturation)
    except AlgorithmRefused as exc:
        _fail(f"algorithm refused: {exc}")
    except ValueError as exc:
        _fail(str(exc))
    click.echo(f"result: {verdict.outcome}")
    click.echo(f"algorithm: {used}")
    click.echo(f"explored: {verdict.explored}")
    if verdict.reason:
        click.echo(f"reason: {verdict.reason}")
    if verdict.consistent and witness:
        by_id = inst.by_id
        events = [by_id[eid] for eid in verdict.witness or ()]
        trace = make_instance("trace", events, inst.cap_map)
        with open(witness, "w", encoding="utf-8") as fh:
            fh.write(serialize_instance(trace))
        click.echo(f"witness: {witness}")
    sys.exit(0 if verdict.consistent else 1)


_REDUCTIONS = {
    "ham": (parse_digraph, from_hamiltonian),
    "1in3": (parse_dimacs, from_one_in_three_two_threads),
    "3sat": (parse_dimacs, from_3sat_t3_m5),
    "ov": (parse_ov, from_orthogonal_vectors),
    "vsc": (parse_vsc_read, from_vsc_read),
}


@main.command()
@click.argument("mode", required=False)
@click.option("--reduction", type=click.Choice(sorted(_REDUCTIONS)))
@click.option("--input", "input_path", type=click.Path())
@click.option("--events", type=int, default=20, show_default=True)
@click.option("--threads", type=int, default=3, show_default=True)
@click.option("--channels", type=int, default=3, show_default=True)
@click.option("--caps", default="0,1,2,inf", show_default=True, help="Capacity menu.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(), help="Instance file path (default stdout).")
def generate(
    mode: str | None,
    reduction: str | None,
    input_path: str | None,
    events: int,
    threads: int,
    channels: int,
    caps: str,
    seed: int,
    output: str | None,
) -> None:
    """Generate an instance: `generate random ...` or `generate --reduction ...`."""
    if mode == "random":
        try:
            menu = [INF if tok == "inf" else float(int(tok)) for tok in caps.split(",")]
            inst, _ = random_positive(events, threads, channels, menu, seed)
        except ValueError as exc:
            _fail(str(exc))
    elif mode is None and reduction is not None:
        if input_path is None:
            _fail("--reduction requires --input")
        parser, builder = _REDUCTIONS[reduction]
        try:
            with open(input_path, "r", encoding="utf-8") as fh:
                source = parser(fh.read())
            inst = builder(source)
        except (OSError, ValueError) as exc:
            _fail(str(exc))
    else:
        _fail("expected `generate random ...` or `generate --reduction <name> --input <file>`")
    text = serialize_instance(inst)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    _echo_shape(inst)
    sys.exit(0)


@main.command()
@click.argument("input", type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--rounds", type=int, default=None, help="Default max(5, ceil(0.05 n)).")
@click.option("--output", type=click.Path(), help="Mutated file path (default stdout).")
def mutate(input: str, seed: int, rounds: int | None, output: str | None) -> None:
    """Mutate an instance's reads-from relation."""
    inst = _load(input)
    try:
        mutated, applied, skipped = mutate_rf(inst, seed, rounds)
    except ValueError as exc:
        _fail(str(exc))
    text = serialize_instance(mutated)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    click.echo(f"applied: {applied}")
    click.echo(f"skipped: {skipped}")
    sys.exit(0)


@main.command("emit-smt")
@click.argument("input", type=click.Path())
@click.option("--with-saturation", is_flag=True, help="Add saturated-order constraints.")
@click.option("--output", type=click.Path(), help="Encoding file path (default stdout).")
@click.option(
    "--solver-cmd",
    default=None,
    help="Solver command template; defaults to $CHANLIN_SMT_CMD.",
)
def emit_smt(
    input: str, with_saturation: bool, output: str | None, solver_cmd: str | None
) -> None:
    """Emit the integer-arithmetic encoding; optionally run a solver on it."""
    inst = _load(input)
    if inst.rf is None:
        _fail("emit-smt requires a reads-from relation")
    text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf, with_saturation)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    cmd = solver_cmd or os.environ.get("CHANLIN_SMT_CMD")
    if cmd:
        if not output:
            _fail("--solver-cmd requires --output")
        try:
            click.echo(f"solver: {run_external_solver(output, cmd)}")
        except SolverError as exc:
            _fail(str(exc))
    sys.exit(0)


@main.command()
@click.argument("input", type=click.Path())
def stats(input: str) -> None:
    """Print structural statistics of an instance."""
    inst = _load(input)
    _echo_shape(inst)
    x = inst.abstract
    classes = classify_channels(x, inst.cap_map)
    for ch in sorted(classes):
        cl = classes[ch]
        desc = f"bounded({cl.bound})" if cl.bound is not None else cl.kind
        click.echo(f"class_{ch}: {desc}")
    topo = communication_topology(x)
    click.echo(f"topology_acyclic: {'true' if topo.acyclic else 'false'}")
    n_rcv = sum(1 for e in inst.events if e.op == "rcv")
    n_rf = len(inst.rf or ())
    click.echo(f"rf_pairs: {n_rf}")
    click.echo(f"rf_coverage: {n_rf}/{n_rcv}")
    sys.exit(0)


def _echo_shape(inst: Instance) -> None:
    caps = [c for _, c in inst.cap]
    k = format_cap(max(caps)) if caps else "0"
    click.echo(f"n: {inst.n}")
    click.echo(f"t: {len(inst.abstract.threads)}")
    click.echo(f"m: {len(inst.cap)}")
    click.echo(f"k: {k}")


if __name__ == "__main__":
    main()
