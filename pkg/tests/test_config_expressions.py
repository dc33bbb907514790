from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from maeigen.config import THREADS_ENV, RunConfig, SolverOptions, read_config_file, worker_count
from maeigen.errors import InvalidSpec
from maeigen.expressions import compile_expression


def test_run_config_defaults() -> None:
    config = RunConfig(command="eigen")
    assert config.domain == "disc 0 0 1"
    assert config.width == 2
    assert config.solver_options() == SolverOptions()
    assert config.eigen_options().normalize is True


@pytest.mark.parametrize(
    "field, value",
    [("h", 0.0), ("width", 0), ("bisect_tol", 1.5), ("alpha", 0.0), ("policy", "jacobi")],
)
def test_run_config_rejects(field: str, value: object) -> None:
    with pytest.raises(ValidationError):
        RunConfig(command="eigen", **{field: value})


def test_run_config_forbids_unknown_keys() -> None:
    with pytest.raises(ValidationError):
        RunConfig(command="eigen", spacing=0.1)


def test_read_config_file(tmp_path: Path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("# comment\n\nmax-iter = 50   # trailing\ndomain = box 0 0 1 1\n", encoding="utf-8")
    assert read_config_file(path) == {"max_iter": "50", "domain": "box 0 0 1 1"}


def test_read_config_file_rejects_bare_words(tmp_path: Path) -> None:
    path = tmp_path / "bad.cfg"
    path.write_text("domain disc\n", encoding="utf-8")
    with pytest.raises(ValueError, match="bad.cfg:1"):
        read_config_file(path)


@pytest.mark.parametrize("raw, expected", [("3", 3), ("0", None), ("", None), ("many", None)])
def test_worker_count(monkeypatch: pytest.MonkeyPatch, raw: str, expected: int | None) -> None:
    monkeypatch.setenv(THREADS_ENV, raw)
    assert worker_count() == (expected if expected is not None else (os.cpu_count() or 1))


def test_expression_on_points() -> None:
    expr = compile_expression("exp(x) * (1 - 2*t) + r")
    points = np.array([[0.0, 0.0], [3.0, 4.0]])
    values = expr(points, np.array([0.0, -1.0]))
    np.testing.assert_allclose(values, [1.0, 3 * np.exp(3.0) + 5.0])
    assert expr.uses_t


def test_constant_expression_broadcasts() -> None:
    assert compile_expression("pi")(np.zeros((4, 2))).shape == (4,)


@pytest.mark.parametrize(
    "text",
    [
        "__import__('os').system('true')",
        "x.__class__",
        "open('f')",
        "[x for x in y]",
        "lambda: 1",
        "z + 1",
        "x +",
    ],
)
def test_expression_whitelist(text: str) -> None:
    with pytest.raises(InvalidSpec):
        compile_expression(text)


@pytest.mark.parametrize("text", ["9**9**9", "x**(2**10)", "2**1000", "x**-100", "1 + 'a'"])
def test_oversized_powers_and_string_literals_are_rejected(text: str) -> None:
    with pytest.raises(InvalidSpec):
        compile_expression(text)


def test_ordinary_powers_are_allowed() -> None:
    expr = compile_expression("x**2 + 2**-3 + (1 + y)**r + x**(0.5 * 4)")
    np.testing.assert_allclose(expr(np.array([[2.0, 0.0]])), [4.0 + 0.125 + 1.0 + 4.0])


def test_restricted_variables() -> None:
    with pytest.raises(InvalidSpec, match="allowed: x, y, r"):
        compile_expression("x + t", ("x", "y", "r"))
