"""
Shared pytest fixtures: corpus programs, a fast configuration and random program sources
"""

import json
import os
import random
import sys
from pathlib import Path
from typing import Callable, Dict, List

import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from irqracer.config import ToolConfig
from irqracer.frontend import load_program
from irqracer.frontend.ast import Program

CORPUS = Path(__file__).parent / "corpus"


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.idl").read_text()


def corpus_expected(name: str) -> Dict:
    return json.loads((CORPUS / "expected" / f"{name}.json").read_text())


def corpus_names() -> List[str]:
    return sorted(path.stem for path in CORPUS.glob("*.idl"))


@pytest.fixture
def tool_config() -> ToolConfig:
    """Defaults with tight budgets and replay checking on."""
    return ToolConfig(symbolic_timeout=30, lmax=8, step_limit=20_000, assert_replay=True)


@pytest.fixture
def corpus_program() -> Callable[[str], Program]:
    return lambda name: load_program(corpus_source(name))


# ------------------------------------------------------------ random programs

_TASK_PRIO = 5


def _expr(rng: random.Random, names: List[str]) -> str:
    choice = rng.random()
    left = rng.choice(names)
    if choice < 0.3:
        return left
    if choice < 0.6:
        return f"{left} + {rng.randint(0, 3)}"
    return f"{left} {rng.choice(['+', '-', '&', '|'])} {rng.choice(names)}"


def _cond(rng: random.Random, names: List[str]) -> str:
    return f"{rng.choice(names)} {rng.choice(['==', '!=', '<', '>'])} {rng.randint(0, 4)}"


def _statements(rng: random.Random, budget: int, globals_: List[str], readable: List[str],
                lines: List[int], depth: int = 0) -> List[str]:
    stmts: List[str] = []
    while budget > 0:
        roll = rng.random()
        if roll < 0.12 and depth == 0 and lines:
            line = rng.choice(lines)
            inner = _statements(rng, min(2, budget - 1), globals_, readable, lines, depth + 1) or ["output(0);"]
            stmts.append(f"irq_disable({line});")
            stmts.extend(inner)
            stmts.append(f"irq_enable({line});")
            budget -= len(inner) + 1
        elif roll < 0.3 and depth < 2 and budget >= 2:
            body = _statements(rng, rng.randint(1, 2), globals_, readable, lines, depth + 1) or ["output(1);"]
            stmts.append(f"if ({_cond(rng, readable)}) {{")
            stmts.extend("    " + s for s in body)
            stmts.append("}")
            budget -= len(body)
        elif roll < 0.45:
            stmts.append(f"output({_expr(rng, readable)});")
        else:
            stmts.append(f"{rng.choice(globals_)} = {_expr(rng, readable)};")
        budget -= 1
    return stmts


def random_program_source(seed: int, max_statements: int = 20) -> str:
    """
    A small well-formed program: one task, one or two ISRs, 8-bit register input

    ISR i handles line i with priority i; the task runs below every ISR.
    """
    rng = random.Random(seed)
    globals_ = [f"g{i}" for i in range(rng.randint(1, 3))]
    isr_count = rng.randint(1, 2)
    lines = list(range(1, isr_count + 1))
    readable = globals_ + ["IN"]

    total = rng.randint(3, max_statements)
    task_size = max(1, total * 2 // 3)
    isr_sizes = [max(1, (total - task_size) // isr_count) for _ in lines]

    out = ["register IN width 8 readonly;"]
    out += [f"global {name} = 0;" for name in globals_]
    out.append(f"task main prio {_TASK_PRIO} {{")
    out += ["    " + s for s in _statements(rng, task_size, globals_, readable, lines)]
    out.append("}")
    for line, size in zip(lines, isr_sizes):
        others = [n for n in lines if n != line]
        out.append(f"isr h{line} line {line} prio {line} {{")
        out += ["    " + s for s in _statements(rng, size, globals_, readable, others)]
        out.append("}")
    return "\n".join(out) + "\n"


@pytest.fixture
def random_programs() -> Callable[[int, int], List[Program]]:
    """random_programs(count, seed) -> parsed programs from consecutive seeds."""
    def make(count: int, seed: int = 0) -> List[Program]:
        return [load_program(random_program_source(seed + i)) for i in range(count)]
    return make
