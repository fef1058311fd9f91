"""Synchronous learning dynamics on bipartite game instances.

Every step re-evaluates all non-controlled agents against the previous
profile: agent i commits to 1 when even the overestimate of its neighbor
pressure stays below its threshold (c_i * sum of ceil(a_j) < 1), commits
to 0 when even the underestimate exceeds it (c_i * sum of floor(a_j) > 1),
and otherwise stays undecided. Controlled agents are pinned to 0; the
pinning contributes nothing to either sum, which is arithmetically the
same as removing them from the game.

The undecided action is symbolic: only its ceiling (1) and floor (0) ever
enter the update, so it carries no numeric value.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance, is_well_behaved

__all__ = [
    "Action",
    "Profile",
    "Trace",
    "ConvergenceError",
    "initial_profile",
    "step",
    "run",
    "run_staged",
    "run_selection_rule",
]

# Internal action codes. ceil(a): 0 only for ZERO; floor(a): 1 only for ONE.
_ZERO, _ONE, _UND = 0, 1, 2


class Action(Enum):
    """Tri-state agent action: committed 0, committed 1, or undecided."""

    ZERO = _ZERO
    ONE = _ONE
    UNDECIDED = _UND

    @property
    def ceil(self) -> int:
        return 0 if self is Action.ZERO else 1

    @property
    def floor(self) -> int:
        return 1 if self is Action.ONE else 0


class ConvergenceError(RuntimeError):
    """The engine exceeded its convergence bound (engine bug or an
    out-of-theory staged input; plain runs from the undecided start always
    converge within |V| steps)."""


@dataclass(frozen=True)
class Profile:
    """One snapshot of all agent actions plus the set pinned to 0."""

    actions: tuple[Action, ...]
    controlled: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        for i in self.controlled:
            if not (1 <= i <= len(self.actions)):
                raise ValueError(f"controlled agent {i} outside 1..{len(self.actions)}")
            if self.actions[i - 1] is not Action.ZERO:
                raise ValueError(f"controlled agent {i} must have action ZERO")

    def action(self, agent: int) -> Action:
        return self.actions[agent - 1]

    @property
    def zeros(self) -> frozenset[int]:
        return frozenset(i + 1 for i, a in enumerate(self.actions) if a is Action.ZERO)

    @property
    def ones(self) -> frozenset[int]:
        return frozenset(i + 1 for i, a in enumerate(self.actions) if a is Action.ONE)

    @property
    def undecided(self) -> frozenset[int]:
        return frozenset(
            i + 1 for i, a in enumerate(self.actions) if a is Action.UNDECIDED
        )


@dataclass(frozen=True)
class Trace:
    """Time-indexed run record.

    steps[0] is the starting profile (undecided everywhere except pinned
    agents); converged_at is the first index whose actions equal the
    previous step's. injections lists (step index, agents pinned at that
    step) for the start and every later stage boundary.
    """

    steps: tuple[Profile, ...]
    converged_at: int
    injections: tuple[tuple[int, frozenset[int]], ...]

    @property
    def final(self) -> Profile:
        return self.steps[-1]

    @cached_property
    def zero_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(p.zeros for p in self.steps)

    @cached_property
    def one_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(p.ones for p in self.steps)

    def format_lines(self) -> list[str]:
        """Debug export: one line per step, `t=<k> zeros=[..] ones=[..]`."""

        def fmt(s: frozenset[int]) -> str:
            return "[" + ",".join(str(i) for i in sorted(s)) + "]"

        return [
            f"t={t} zeros={fmt(z)} ones={fmt(o)}"
            for t, (z, o) in enumerate(zip(self.zero_sets, self.one_sets))
        ]


# ---------------------------------------------------------------------------
# code-array kernels (shared by the public API, the solver, and verifiers)


def _step_codes(adj: np.ndarray, c: np.ndarray, codes: np.ndarray, pinned: np.ndarray) -> np.ndarray:
    """One synchronous update on raw code arrays (1-D) or batches (2-D).

    For batches, columns are independent runs; c and pinned broadcast
    column-wise when shared.
    """
    ceil = (codes != _ZERO).astype(np.float64)
    floor = (codes == _ONE).astype(np.float64)
    s_ceil = adj @ ceil
    s_floor = adj @ floor
    new = np.full(codes.shape, _UND, dtype=np.int8)
    # The two commit conditions are mutually exclusive: floor sums never
    # exceed ceil sums, so assignment order does not matter.
    new[c * s_ceil < 1.0] = _ONE
    new[c * s_floor > 1.0] = _ZERO
    new[np.broadcast_to(pinned, new.shape)] = _ZERO
    return new


def _start_codes(n: int, pinned: np.ndarray) -> np.ndarray:
    codes = np.full(n, _UND, dtype=np.int8)
    codes[pinned] = _ZERO
    return codes


def _converge_codes(
    adj: np.ndarray, c: np.ndarray, codes: np.ndarray, pinned: np.ndarray, cap: int
) -> tuple[np.ndarray, int]:
    """Iterate to a fixpoint; returns (final codes, confirming step count)."""
    for t in range(1, cap + 1):
        new = _step_codes(adj, c, codes, pinned)
        if np.array_equal(new, codes):
            return codes, t
        codes = new
    raise ConvergenceError(f"no fixpoint within {cap} steps")


def _converge_batch(
    adj: np.ndarray, c: np.ndarray, codes: np.ndarray, pinned: np.ndarray, cap: int
) -> tuple[np.ndarray, np.ndarray]:
    """Batch fixpoint over columns; returns (final codes, per-column steps).

    Converged columns sit at fixpoints, so continuing to update them is a
    no-op; no masking needed.
    """
    conv_at = np.full(codes.shape[1], 0, dtype=np.int64)
    for t in range(1, cap + 1):
        new = _step_codes(adj, c, codes, pinned)
        same = (new == codes).all(axis=0)
        conv_at[same & (conv_at == 0)] = t
        if same.all():
            return codes, conv_at
        codes = new
    raise ConvergenceError(f"some columns reached no fixpoint within {cap} steps")


def _pinned_mask(inst: Instance, agents: frozenset[int]) -> np.ndarray:
    mask = np.zeros(inst.n, dtype=bool)
    for i in agents:
        mask[i - 1] = True
    return mask


def _codes_of(profile: Profile) -> np.ndarray:
    return np.array([a.value for a in profile.actions], dtype=np.int8)


_ACTION_OF_CODE = {_ZERO: Action.ZERO, _ONE: Action.ONE, _UND: Action.UNDECIDED}


def _profile_of(codes: np.ndarray, controlled: frozenset[int]) -> Profile:
    return Profile(
        actions=tuple(_ACTION_OF_CODE[int(v)] for v in codes), controlled=controlled
    )


def _check_agents(inst: Instance, agents: Iterable[int], what: str) -> frozenset[int]:
    out = frozenset(int(i) for i in agents)
    bad = [i for i in out if not (1 <= i <= inst.n)]
    if bad:
        raise ValueError(f"{what} contains unknown agents {sorted(bad)}")
    return out


def forced_one_mask(inst: Instance, zero_set: frozenset[int]) -> np.ndarray:
    """Agents that would commit to 1 one step after the given zero-set.

    Everyone outside the zero-set counts as ceiling 1, so entry j is true
    iff c_j * |n(j) \\ zero_set| < 1. This is the vectorized form of the
    one-step influence indicator.
    """
    ceil = np.ones(inst.n, dtype=np.float64)
    for i in zero_set:
        ceil[i - 1] = 0.0
    sums = inst.adjacency_matrix @ ceil
    return inst.c_array * sums < 1.0


# ---------------------------------------------------------------------------
# public operations


def initial_profile(inst: Instance, control: Iterable[int] = ()) -> Profile:
    """All-undecided start with the control set pinned to 0."""
    controlled = _check_agents(inst, control, "control set")
    actions = tuple(
        Action.ZERO if i in controlled else Action.UNDECIDED
        for i in range(1, inst.n + 1)
    )
    return Profile(actions=actions, controlled=controlled)


def step(inst: Instance, prof: Profile) -> Profile:
    """One synchronous update of every non-controlled agent."""
    if len(prof.actions) != inst.n:
        raise ValueError(
            f"profile has {len(prof.actions)} agents, instance has {inst.n}"
        )
    pinned = _pinned_mask(inst, prof.controlled)
    new = _step_codes(inst.adjacency_matrix, inst.c_array, _codes_of(prof), pinned)
    return _profile_of(new, prof.controlled)


def _cap(inst: Instance) -> int:
    # |V| changes plus the confirming step, plus one of slack.
    return inst.n + 2


class _Runner:
    """Accumulates trace steps for run/run_staged/run_selection_rule."""

    def __init__(self, inst: Instance, control: frozenset[int]):
        self.inst = inst
        self.adj = inst.adjacency_matrix
        self.c = inst.c_array
        self.controlled = control
        self.pinned = _pinned_mask(inst, control)
        self.codes = _start_codes(inst.n, self.pinned)
        self.steps = [_profile_of(self.codes, control)]
        self.injections = [(0, control)]
        self.converged_at = 0

    def converge(self) -> None:
        for _ in range(_cap(self.inst)):
            new = _step_codes(self.adj, self.c, self.codes, self.pinned)
            self.steps.append(_profile_of(new, self.controlled))
            if np.array_equal(new, self.codes):
                self.converged_at = len(self.steps) - 1
                return
            self.codes = new
        raise ConvergenceError(f"stage exceeded {_cap(self.inst)} steps")

    def inject(self, agents: frozenset[int]) -> None:
        self.controlled = self.controlled | agents
        self.pinned = _pinned_mask(self.inst, self.controlled)
        self.codes = self.codes.copy()
        self.codes[self.pinned] = _ZERO
        self.steps.append(_profile_of(self.codes, self.controlled))
        self.injections.append((len(self.steps) - 1, agents))

    def trace(self) -> Trace:
        return Trace(
            steps=tuple(self.steps),
            converged_at=self.converged_at,
            injections=tuple(self.injections),
        )


def run(inst: Instance, control: Iterable[int] = ()) -> Trace:
    """Run from the all-undecided start with ``control`` pinned to 0 until
    two consecutive profiles agree."""
    runner = _Runner(inst, _check_agents(inst, control, "control set"))
    runner.converge()
    return runner.trace()


def _checked_partition(inst: Instance, partition: Sequence[Iterable[int]]) -> list[frozenset[int]]:
    cells = [_check_agents(inst, cell, f"partition cell #{k}") for k, cell in enumerate(partition)]
    seen: set[int] = set()
    for k, cell in enumerate(cells):
        overlap = seen & cell
        if overlap:
            raise ValueError(f"partition cell #{k} overlaps earlier cells on {sorted(overlap)}")
        seen |= cell
    return cells


def run_staged(inst: Instance, partition: Sequence[Iterable[int]]) -> Trace:
    """Stage-wise control: converge under the first cell, add the next cell,
    re-converge, and so on.

    For well-behaved instances with all cells inside S0 the final profile
    equals run(inst, union of cells): staging never changes where the
    cascade ends, only when agents are pinned. Arbitrary cells are executed
    as given but carry no such guarantee.
    """
    cells = _checked_partition(inst, partition)
    runner = _Runner(inst, cells[0] if cells else frozenset())
    runner.converge()
    for cell in cells[1:]:
        runner.inject(cell)
        runner.converge()
    return runner.trace()


def _selection_quotient(d_v: int, f_ref: int, f_cur: int) -> float | None:
    """Left-hand side of the late-addition rule, or None when it cannot fire.

    The reference influence bounds the conditional support of c_v from
    above at 1/f_ref; with zero reference influence the support bound is
    the global one, c_v < 1. Zero current influence means no neighbor can
    be forced yet, so the rule never fires (matching the real dynamics,
    where c_v * 0 > 1 is impossible).
    """
    if f_cur == 0:
        return None
    upper = 1.0 if f_ref == 0 else 1.0 / f_ref
    return 1.0 / d_v + upper - 1.0 / f_cur


def run_selection_rule(
    inst: Instance, partition: Sequence[Iterable[int]], tail: Iterable[int]
) -> Trace:
    """Shadow-constant variant of staged control for the final stage.

    Runs the staged process over ``partition``, pins ``tail`` directly into
    the zero-set, then grows the zero-set by the selection rule instead of
    the dynamics: a candidate v on side S0 joins when

        1/d_v + 1/f_v(reference) - 1/f_v(current) > c_v

    where f_v is the one-step influence, the reference set is the zero-set
    just before the tail was added, and rounds repeat until no candidate
    qualifies. Side S1 keeps following the ordinary update. Distributionally
    (over well-behaved constant draws) the final zero-set matches pinning
    the tail and running the plain dynamics; per-draw paths differ.
    """
    if not is_well_behaved(inst):
        raise ValueError("selection-rule process requires a well-behaved instance")
    cells = _checked_partition(inst, partition)
    tail_set = _check_agents(inst, tail, "tail set")
    s0 = set(inst.s0)
    for k, cell in enumerate(cells):
        if not cell <= s0:
            raise ValueError(f"partition cell #{k} must lie inside S0")
    if not tail_set <= s0:
        raise ValueError("tail set must lie inside S0")
    union = frozenset().union(*cells) if cells else frozenset()
    if tail_set & union:
        raise ValueError(f"tail overlaps the partition on {sorted(tail_set & union)}")

    runner = _Runner(inst, cells[0] if cells else frozenset())
    runner.converge()
    for cell in cells[1:]:
        runner.inject(cell)
        runner.converge()

    reference = frozenset(i + 1 for i in np.flatnonzero(runner.codes == _ZERO))
    runner.inject(tail_set)
    f_ref = {
        v: int(inst.adjacency_matrix[v - 1] @ forced_one_mask(inst, reference))
        for v in inst.s0
    }

    s1_mask = np.zeros(inst.n, dtype=bool)
    s1_mask[inst.n0:] = True
    for _ in range(_cap(inst)):
        current = frozenset(i + 1 for i in np.flatnonzero(runner.codes == _ZERO))
        forced = forced_one_mask(inst, current)
        fired = []
        for v in sorted(s0 - current):
            f_cur = int(inst.adjacency_matrix[v - 1] @ forced)
            q = _selection_quotient(inst.degree(v), f_ref[v], f_cur)
            if q is not None and q > inst.c[v - 1]:
                fired.append(v)
        # S1 follows the dynamics; S0 moves only via the rule.
        stepped = _step_codes(inst.adjacency_matrix, inst.c_array, runner.codes, runner.pinned)
        new = runner.codes.copy()
        new[s1_mask] = stepped[s1_mask]
        for v in fired:
            new[v - 1] = _ZERO
        runner.controlled = runner.controlled | frozenset(fired)
        runner.pinned = _pinned_mask(inst, runner.controlled)
        runner.steps.append(_profile_of(new, runner.controlled))
        if not fired and np.array_equal(new, runner.codes):
            runner.codes = new
            runner.converged_at = len(runner.steps) - 1
            return runner.trace()
        runner.codes = new
    raise ConvergenceError(f"selection rule exceeded {_cap(inst)} rounds")
