"""Godfrey-Chapman geometric rules: necessary conditions for indistinguishability.

Models need not share compartment labels, so every rule compares sorted
multisets of quantities rather than per-label values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import ModelError, ModelSpec, bfs_distances, graph_invariants, reaching

__all__ = ["RuleResult", "RuleReport", "godfrey_rules", "rhs_coefficient_count", "RhsCount"]

RULE_NAMES = {
    1: "shortest input-output distances",
    2: "compartments reaching each output",
    3: "compartments reached from each input",
    4: "number of traps",
}


@dataclass(frozen=True)
class RuleResult:
    rule: int
    passed: bool
    left: object
    right: object

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, (list, tuple)):
                return [enc(v) for v in x]
            return "inf" if x == math.inf else x

        return {"rule": self.rule, "name": RULE_NAMES[self.rule], "passed": self.passed,
                "witness": {"a": enc(self.left), "b": enc(self.right)}}


@dataclass(frozen=True)
class RuleReport:
    results: tuple[RuleResult, ...]
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list[RuleResult]:
        return [r for r in self.results if not r.passed]

    def __getitem__(self, rule: int) -> RuleResult:
        return self.results[rule - 1]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "rules": [r.to_dict() for r in self.results]}


def godfrey_rules(a: ModelSpec, b: ModelSpec) -> RuleReport:
    if len(a.inputs) != len(b.inputs) or len(a.outputs) != len(b.outputs):
        raise ModelError(
            f"incomparable io cardinalities: {len(a.inputs)} in/{len(a.outputs)} out "
            f"vs {len(b.inputs)} in/{len(b.outputs)} out"
        )
    ga, gb = graph_invariants(a), graph_invariants(b)
    pairs = [
        (1, sorted(ga.shortest_dist.values()), sorted(gb.shortest_dist.values())),
        (2, sorted(ga.reach_to_output.values()), sorted(gb.reach_to_output.values())),
        (3, sorted(ga.reach_from_input.values()), sorted(gb.reach_from_input.values())),
        (4, len(ga.traps), len(gb.traps)),
    ]
    results = tuple(RuleResult(k, x == y, x, y) for k, x, y in pairs)
    return RuleReport(results, {"a": ga, "b": gb})


@dataclass(frozen=True)
class RhsCount:
    count: int
    unreachable: bool = False


def rhs_coefficient_count(m: ModelSpec) -> dict[tuple[int, int], RhsCount]:
    """Predicted number of non-monic right-hand-side coefficients per pair.

    ``|V_H| - 1`` when input and output coincide, otherwise
    ``|V_H| - dist(input, output)``, with H the vertices reaching the output.
    """
    succ = m.successors()
    out = {}
    for j in sorted(m.outputs):
        size = len(reaching(m, j))
        for i in sorted(m.inputs):
            if i == j:
                out[(i, j)] = RhsCount(size - 1)
                continue
            d = bfs_distances(succ, i).get(j)
            out[(i, j)] = RhsCount(0, True) if d is None else RhsCount(size - d)
    return out
