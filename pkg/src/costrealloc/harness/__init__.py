"""Trace I/O, workload generators, baselines and the replay driver."""

from .baselines import BASELINES, FirstFit, GapClasses, LogCompact
from .generate import KINDS, generate
from .run import ALL_MODES, DEFAULT_MODELS, RunConfig, RunReport, run, sweep
from .trace import ParseError, Trace, parse_trace, read_trace, serialize_trace, write_trace
