"""SMT-LIB emission: shape, variable inventory, saturation strengthening."""

from __future__ import annotations

import random
import stat

import pytest

from chanlin import (
    Event,
    INF,
    SolverError,
    emit_smtlib,
    make_instance,
    parse_instance,
    run_external_solver,
)
from chanlin.generators import random_positive


def balanced(text: str) -> bool:
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


class TestEmit:
    def test_empty_instance(self):
        inst = make_instance("abstract", [], {}, [])
        text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
        assert text.startswith("(set-logic QF_LIA)")
        assert text.rstrip().endswith("(check-sat)")
        assert "declare-const" not in text

    def test_variable_inventory(self):
        for seed in range(8):
            inst, _ = random_positive(10, 2, 3, [0.0, 1.0, INF], seed)
            text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
            n, m = inst.n, len(inst.cap)
            assert text.count("(declare-const") == n + m * (2 * n + 2)
            assert balanced(text)

    def test_counters_for_empty_channel(self):
        events = [Event(1, "t1", "snd", "a"), Event(2, "t2", "rcv", "a")]
        inst = make_instance("abstract", events, {"a": INF, "b": 1.0}, [(1, 2)])
        text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
        # Channel b has no events but still gets its 2n+2 counters.
        assert "y_b_snd_0" in text and "y_b_rcv_2" in text

    def test_sync_pairs_adjacent(self):
        events = [Event(1, "t1", "snd", "c"), Event(2, "t2", "rcv", "c")]
        inst = make_instance("abstract", events, {"c": 0.0}, [(1, 2)])
        text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
        assert "(assert (= (+ x_1 1) x_2))" in text

    def test_async_rf_strict(self):
        events = [Event(1, "t1", "snd", "c"), Event(2, "t2", "rcv", "c")]
        inst = make_instance("abstract", events, {"c": 1.0}, [(1, 2)])
        text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
        assert "(assert (< x_1 x_2))" in text

    def test_saturation_cycle_emits_false(self, fixtures):
        inst = parse_instance((fixtures / "two_thread_cap1_negative_rf.vchk").read_text())
        text = emit_smtlib(inst.abstract, inst.cap_map, inst.rf, with_saturation=True)
        assert "(assert false)" in text

    def test_saturation_adds_constraints(self):
        events = [Event(1, "t1", "snd", "c"), Event(2, "t2", "rcv", "c")]
        inst = make_instance("abstract", events, {"c": 0.0}, [(1, 2)])
        plain = emit_smtlib(inst.abstract, inst.cap_map, inst.rf)
        strengthened = emit_smtlib(inst.abstract, inst.cap_map, inst.rf, with_saturation=True)
        assert len(strengthened) >= len(plain)
        assert balanced(strengthened)


class TestExternalSolver:
    def test_missing_executable(self, tmp_path):
        enc = tmp_path / "e.smt2"
        enc.write_text("(check-sat)\n")
        with pytest.raises(SolverError):
            run_external_solver(str(enc), "/nonexistent/solver")

    def _fake_solver(self, tmp_path, body: str) -> str:
        script = tmp_path / "solver.sh"
        script.write_text(f"#!/bin/sh\n{body}\n")
        script.chmod(script.stat().st_mode | stat.S_IXUSR)
        return str(script)

    def test_parses_first_token(self, tmp_path):
        enc = tmp_path / "e.smt2"
        enc.write_text("(check-sat)\n")
        cmd = self._fake_solver(tmp_path, "echo sat")
        assert run_external_solver(str(enc), cmd) == "sat"
        cmd = self._fake_solver(tmp_path, "echo unsat")
        assert run_external_solver(str(enc), cmd) == "unsat"

    def test_unparseable_output(self, tmp_path):
        enc = tmp_path / "e.smt2"
        enc.write_text("(check-sat)\n")
        cmd = self._fake_solver(tmp_path, "echo hello")
        with pytest.raises(SolverError):
            run_external_solver(str(enc), cmd)

    def test_input_placeholder(self, tmp_path):
        enc = tmp_path / "e.smt2"
        enc.write_text("(check-sat)\n")
        cmd = self._fake_solver(tmp_path, 'test -f "$1" && echo unknown')
        assert run_external_solver(str(enc), f"{cmd} {{input}}") == "unknown"
