"""The allocators never see cost functions."""

import ast
import pathlib
from fractions import Fraction

import pytest

from costrealloc.harness import generate
from costrealloc.harness.run import make_allocator, RunConfig
from costrealloc.costmodel import Meter, parse_model

import costrealloc

ALLOCATOR_MODULES = ["core", "amortized", "checkpointed", "deamortized", "defrag"]
PKG = pathlib.Path(costrealloc.__file__).parent


def imported_modules(path):
    tree = ast.parse(path.read_text())
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            yield (node.module or "")
            for alias in node.names:
                yield alias.name
        elif isinstance(node, ast.Import):
            for alias in node.names:
                yield alias.name


@pytest.mark.parametrize("mod", ALLOCATOR_MODULES)
def test_allocator_modules_do_not_import_costmodel(mod):
    names = list(imported_modules(PKG / f"{mod}.py"))
    assert not any("costmodel" in n for n in names)


def stream(mode, eps, spec, ops):
    cfg = RunConfig(mode, eps)
    alloc = make_allocator(cfg)
    meter = Meter([parse_model(spec)])
    lines = []
    alloc.subscribe(meter)
    alloc.subscribe(lambda e: lines.append(e.line()))
    for op in ops:
        alloc.insert(op[1], op[2]) if op[0] == "I" else alloc.delete(op[1])
    return "\n".join(lines).encode()


@pytest.mark.parametrize("mode", ["amortized", "checkpointed", "deamortized"])
def test_event_streams_identical_across_models(mode):
    ops = generate("uniform-random", {"n": 800, "max_size": 256}, seed=12).ops
    streams = {spec: stream(mode, Fraction(1, 4), spec, ops) for spec in ("constant:1", "linear:1", "sqrt:1", "seek:10,1")}
    assert len(set(streams.values())) == 1
