"""
Path-condition solving

Concrete seeds are tried first (cheap, and they keep assignments close to
user-supplied inputs), then z3 with a timeout, then plain enumeration when
every variable is narrow enough. Every assignment is re-checked by
substituting it into the constraints before it is returned.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import z3

logger = logging.getLogger(__name__)

ENUMERATION_MAX_BITS = 10
ENUMERATION_MAX_POINTS = 1 << 20
RANDOM_SEEDS = 8


class SolveStatus(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SolveResult:
    status: SolveStatus
    assignment: Dict[str, int] = field(default_factory=dict)
    method: str = ""

    @property
    def sat(self) -> bool:
        return self.status is SolveStatus.SAT


def _free_variables(constraints: Sequence[z3.BoolRef]) -> Dict[str, z3.BitVecRef]:
    found: Dict[str, z3.BitVecRef] = {}
    seen = set()
    stack = list(constraints)
    while stack:
        term = stack.pop()
        if term.get_id() in seen:
            continue
        seen.add(term.get_id())
        if z3.is_const(term) and term.decl().kind() == z3.Z3_OP_UNINTERPRETED:
            found[str(term)] = term
            continue
        stack.extend(term.children())
    return found


def holds(constraints: Sequence[z3.BoolRef], variables: Mapping[str, z3.BitVecRef],
          assignment: Mapping[str, int]) -> bool:
    """Evaluate the constraints under a concrete assignment (missing variables read as 0)."""
    pairs = [(var, z3.BitVecVal(assignment.get(name, 0), var.size())) for name, var in variables.items()]
    for constraint in constraints:
        closed = z3.simplify(z3.substitute(constraint, *pairs) if pairs else constraint)
        if not z3.is_true(closed):
            return False
    return True


def _normalise(assignment: Mapping[str, int], variables: Mapping[str, z3.BitVecRef]) -> Dict[str, int]:
    return {name: assignment.get(name, 0) & ((1 << var.size()) - 1) for name, var in sorted(variables.items())}


def _try_seeds(constraints, variables, seeds: Iterable[Mapping[str, int]]) -> Optional[Dict[str, int]]:
    for seed in seeds:
        candidate = _normalise(seed, variables)
        if holds(constraints, variables, candidate):
            return candidate
    return None


def _enumerate(constraints, variables) -> SolveResult:
    names = sorted(variables)
    ranges = [range(1 << variables[name].size()) for name in names]
    for values in itertools.product(*ranges):
        candidate = dict(zip(names, values))
        if holds(constraints, variables, candidate):
            return SolveResult(SolveStatus.SAT, candidate, "enumeration")
    return SolveResult(SolveStatus.UNSAT, method="enumeration")


def solve(constraints: Sequence[z3.BoolRef], variables: Optional[Mapping[str, z3.BitVecRef]] = None,
          seed_inputs: Optional[Sequence[Mapping[str, int]]] = None, timeout_ms: int = 10_000,
          rng: Optional[random.Random] = None) -> SolveResult:
    """
    Find an assignment for the input variables satisfying every constraint

    Args:
        constraints: Path condition atoms (z3 booleans over bit-vectors)
        variables: Input variables to assign; defaults to the free variables of the constraints
        seed_inputs: Concrete assignments to try before solving
        timeout_ms: z3 timeout
        rng: Source of random concrete seeds

    Returns:
        SolveResult; SAT assignments are unsigned values within each variable's width
    """
    constraints = list(constraints)
    variables = dict(variables) if variables is not None else {}
    for name, var in _free_variables(constraints).items():
        variables.setdefault(name, var)

    rng = rng or random.Random(0)
    seeds: List[Mapping[str, int]] = [{}]
    seeds.extend(seed_inputs or ())
    seeds.extend({name: rng.getrandbits(var.size()) for name, var in variables.items()} for _ in range(RANDOM_SEEDS))
    found = _try_seeds(constraints, variables, seeds)
    if found is not None:
        return SolveResult(SolveStatus.SAT, found, "seed")

    solver = z3.Solver()
    solver.set("timeout", int(timeout_ms))
    solver.add(*constraints)
    outcome = solver.check()
    if outcome == z3.sat:
        model = solver.model()
        candidate = {
            name: model.eval(var, model_completion=True).as_long() for name, var in variables.items()
        }
        candidate = _normalise(candidate, variables)
        if holds(constraints, variables, candidate):
            return SolveResult(SolveStatus.SAT, candidate, "z3")
        logger.warning(f"z3 model failed the concrete re-check: {candidate}")
    elif outcome == z3.unsat:
        return SolveResult(SolveStatus.UNSAT, method="z3")

    widths = [var.size() for var in variables.values()]
    if all(w <= ENUMERATION_MAX_BITS for w in widths) and (1 << sum(widths)) <= ENUMERATION_MAX_POINTS:
        return _enumerate(constraints, variables)
    return SolveResult(SolveStatus.UNKNOWN, method="z3")


def check(constraints: Sequence[z3.BoolRef], timeout_ms: int = 10_000) -> SolveStatus:
    """Satisfiability only, without building an assignment."""
    if not constraints:
        return SolveStatus.SAT
    solver = z3.Solver()
    solver.set("timeout", int(timeout_ms))
    solver.add(*constraints)
    outcome = solver.check()
    if outcome == z3.sat:
        return SolveStatus.SAT
    if outcome == z3.unsat:
        return SolveStatus.UNSAT
    return SolveStatus.UNKNOWN
