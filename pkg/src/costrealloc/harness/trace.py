"""Plain-text trace format.

One operation per line::

    I name length     insert
    D name            delete
    C                 system checkpoint
    P name start      initial placement of an inserted object (defrag inputs)

``#`` starts a comment.  A header comment ``# costrealloc-trace v1 k=v ...``
carries optional hints such as the generator and its parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

HEADER = "# costrealloc-trace v1"


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass
class Trace:
    ops: list[tuple] = field(default_factory=list)
    header: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.ops)

    def updates(self) -> int:
        return sum(1 for op in self.ops if op[0] in ("I", "D"))

    def max_length(self) -> int:
        return max((op[2] for op in self.ops if op[0] == "I"), default=0)


def parse_trace(text: str) -> Trace:
    trace = Trace()
    active: set[str] = set()
    placed: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith(HEADER):
            for tok in stripped[len(HEADER):].split():
                key, sep, value = tok.partition("=")
                if sep:
                    trace.header[key] = value
            continue
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        op = line[0]
        if op == "I":
            if len(line) != 3:
                raise ParseError(lineno, "expected 'I name length'")
            name = line[1]
            try:
                length = int(line[2])
            except ValueError:
                raise ParseError(lineno, f"length {line[2]!r} is not an integer") from None
            if length < 1:
                raise ParseError(lineno, f"length must be positive, got {length}")
            if name in active:
                raise ParseError(lineno, f"duplicate insert of active name {name!r}")
            active.add(name)
            trace.ops.append(("I", name, length))
        elif op == "D":
            if len(line) != 2:
                raise ParseError(lineno, "expected 'D name'")
            name = line[1]
            if name not in active:
                raise ParseError(lineno, f"delete of unknown name {name!r}")
            active.discard(name)
            placed.discard(name)
            trace.ops.append(("D", name))
        elif op == "C":
            if len(line) != 1:
                raise ParseError(lineno, "expected 'C'")
            trace.ops.append(("C",))
        elif op == "P":
            if len(line) != 3:
                raise ParseError(lineno, "expected 'P name start'")
            name = line[1]
            if name not in active:
                raise ParseError(lineno, f"placement of unknown name {name!r}")
            if name in placed:
                raise ParseError(lineno, f"second placement of {name!r}")
            try:
                start = int(line[2])
            except ValueError:
                raise ParseError(lineno, f"start {line[2]!r} is not an integer") from None
            if start < 0:
                raise ParseError(lineno, "start must be nonnegative")
            placed.add(name)
            trace.ops.append(("P", name, start))
        else:
            raise ParseError(lineno, f"unknown operation {op!r}")
    return trace


def serialize_trace(trace: Trace) -> str:
    head = HEADER
    if trace.header:
        head += " " + " ".join(f"{k}={v}" for k, v in trace.header.items())
    lines = [head]
    for op in trace.ops:
        lines.append(" ".join(str(x) for x in op))
    return "\n".join(lines) + "\n"


def read_trace(path) -> Trace:
    with open(path) as fh:
        return parse_trace(fh.read())


def write_trace(trace: Trace, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_trace(trace))


def from_ops(ops: Iterable[tuple], **header) -> Trace:
    return Trace(list(ops), {k: str(v) for k, v in header.items()})
