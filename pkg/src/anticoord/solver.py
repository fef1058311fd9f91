"""Control-set objective and selection: greedy and exhaustive search.

The objective f(X) counts edges with at least one endpoint committed to 0
once the dynamics started from control set X have converged; undecided
endpoints count as active (their symbolic action is strictly positive).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations, islice
from typing import Iterable, Sequence

import numpy as np

from .dynamics import _UND, _ZERO, _converge_batch, _converge_codes, _pinned_mask, _start_codes
from .instance import Instance

__all__ = [
    "SideRestriction",
    "GreedyResult",
    "OptResult",
    "EnumerationCapError",
    "DEFAULT_ENUMERATION_CAP",
    "objective",
    "inactivation_ratio",
    "converge_steps",
    "greedy",
    "brute_force",
]

DEFAULT_ENUMERATION_CAP = 5_000_000

_BATCH_COLUMNS = 8192


class EnumerationCapError(RuntimeError):
    """Brute force would enumerate more subsets than the configured cap."""


class SideRestriction(Enum):
    """Where control candidates may come from: S0 only (the setting of the
    monotonicity/submodularity guarantees) or anywhere in V."""

    S0_ONLY = "s0"
    ANY_SIDE = "any"

    def pool(self, inst: Instance) -> list[int]:
        return list(inst.s0) if self is SideRestriction.S0_ONLY else list(range(1, inst.n + 1))


@dataclass(frozen=True)
class GreedyResult:
    """Ordered greedy picks with their running objective values."""

    picks: tuple[int, ...]
    gains: tuple[int, ...]
    values: tuple[int, ...]
    final_value: int

    def to_json(self, total_edges: int) -> str:
        ratio = self.final_value / total_edges if total_edges else 0.0
        return json.dumps(
            {
                "method": "greedy",
                "picks": list(self.picks),
                "gains": list(self.gains),
                "values": list(self.values),
                "f": self.final_value,
                "ratio": ratio,
            }
        )


@dataclass(frozen=True)
class OptResult:
    """Exhaustive-search optimum over all size-r control sets."""

    best_set: tuple[int, ...]
    best_value: int
    subsets_evaluated: int

    def to_json(self, total_edges: int) -> str:
        ratio = self.best_value / total_edges if total_edges else 0.0
        return json.dumps(
            {
                "method": "brute",
                "picks": list(self.best_set),
                "f": self.best_value,
                "ratio": ratio,
                "subsets_evaluated": self.subsets_evaluated,
            }
        )


def _final_codes(inst: Instance, control: frozenset[int]) -> tuple[np.ndarray, int]:
    pinned = _pinned_mask(inst, control)
    codes = _start_codes(inst.n, pinned)
    return _converge_codes(inst.adjacency_matrix, inst.c_array, codes, pinned, inst.n + 2)


def _count_inactive(inst: Instance, codes: np.ndarray) -> int:
    us, vs = inst.edge_index
    nonzero = codes != _ZERO
    if codes.ndim == 1:
        return len(inst.edges) - int(np.sum(nonzero[us] & nonzero[vs]))
    return len(inst.edges) - np.sum(nonzero[us, :] & nonzero[vs, :], axis=0)


def objective(inst: Instance, control: Iterable[int] = ()) -> int:
    """Number of edges inactivated at convergence under ``control``."""
    ctrl = frozenset(int(i) for i in control)
    bad = [i for i in ctrl if not (1 <= i <= inst.n)]
    if bad:
        raise ValueError(f"control set contains unknown agents {sorted(bad)}")
    codes, _ = _final_codes(inst, ctrl)
    return int(_count_inactive(inst, codes))


def inactivation_ratio(inst: Instance, control: Iterable[int] = ()) -> float:
    """objective / |E|; refuses edgeless instances."""
    if not inst.edges:
        raise ValueError("inactivation ratio undefined on an instance with no edges")
    return objective(inst, control) / len(inst.edges)


def converge_steps(inst: Instance, control: Iterable[int] = ()) -> int:
    """Confirming step index of the run under ``control``."""
    _, steps = _final_codes(inst, frozenset(int(i) for i in control))
    return steps


def _evaluate_sets(inst: Instance, control_sets: Sequence[frozenset[int]]) -> np.ndarray:
    """Objective for many control sets at once (columns of one batch)."""
    n, b = inst.n, len(control_sets)
    pinned = np.zeros((n, b), dtype=bool)
    for col, ctrl in enumerate(control_sets):
        for i in ctrl:
            pinned[i - 1, col] = True
    codes = np.full((n, b), _UND, dtype=np.int8)
    codes[pinned] = _ZERO
    final, _ = _converge_batch(
        inst.adjacency_matrix, inst.c_array[:, None], codes, pinned, inst.n + 2
    )
    return _count_inactive(inst, final)


def greedy(inst: Instance, r: int, side: SideRestriction = SideRestriction.S0_ONLY) -> GreedyResult:
    """Pick r agents one at a time, each maximizing the objective given the
    picks so far; ties go to the lowest agent id.

    Every remaining candidate is evaluated at every step (no lazy
    shortcuts), so identical inputs always yield identical picks.
    """
    pool = side.pool(inst)
    if r < 0 or r > len(pool):
        raise ValueError(f"budget {r} exceeds candidate pool of {len(pool)}")
    picks: list[int] = []
    gains: list[int] = []
    values: list[int] = []
    current: frozenset[int] = frozenset()
    current_value = objective(inst, current)
    for _ in range(r):
        candidates = [w for w in pool if w not in current]
        vals = _evaluate_sets(inst, [current | {w} for w in candidates])
        best_idx = int(np.argmax(vals))  # pool is ascending, so first max = lowest id
        best = candidates[best_idx]
        best_value = int(vals[best_idx])
        picks.append(best)
        gains.append(best_value - current_value)
        values.append(best_value)
        current = current | {best}
        current_value = best_value
    return GreedyResult(
        picks=tuple(picks),
        gains=tuple(gains),
        values=tuple(values),
        final_value=current_value,
    )


def brute_force(
    inst: Instance,
    r: int,
    side: SideRestriction = SideRestriction.S0_ONLY,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> OptResult:
    """Evaluate every size-r subset of the candidate pool.

    Refuses outright (never truncates) when C(pool, r) exceeds ``cap``.
    Ties resolve to the lexicographically smallest sorted subset, which is
    the first optimum in combination order.
    """
    pool = side.pool(inst)
    if r < 0 or r > len(pool):
        raise ValueError(f"budget {r} exceeds candidate pool of {len(pool)}")
    total = math.comb(len(pool), r)
    if total > cap:
        raise EnumerationCapError(
            f"C({len(pool)}, {r}) = {total} subsets exceeds enumeration cap {cap}"
        )
    best_set: tuple[int, ...] | None = None
    best_value = -1
    subsets = combinations(pool, r)
    while True:
        chunk = list(islice(subsets, _BATCH_COLUMNS))
        if not chunk:
            break
        vals = _evaluate_sets(inst, [frozenset(s) for s in chunk])
        idx = int(np.argmax(vals))
        if int(vals[idx]) > best_value:
            best_value = int(vals[idx])
            best_set = chunk[idx]
    assert best_set is not None
    return OptResult(best_set=best_set, best_value=best_value, subsets_evaluated=total)
