"""Bipartite game instances: topology, learning constants, generation, I/O.

An instance is a bipartite graph on agents 1..n0 (side S0) and
n0+1..n0+n1 (side S1) together with one learning constant per agent.
Agent i's constant c_i scales how strongly neighbor actions discourage
its preferred action; all theory here needs 0 <= c_i < 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

__all__ = [
    "Instance",
    "CMode",
    "InstanceError",
    "FormatError",
    "BipartitionError",
    "DuplicateEdgeError",
    "LearningConstantError",
    "WellBehavedInfeasibleError",
    "generate_random",
    "random_well_behaved",
    "draw_well_behaved_c",
    "is_well_behaved",
    "parse_instance",
    "serialize_instance",
    "fig1",
    "complete_bipartite",
    "child_seed",
]


class InstanceError(ValueError):
    """Base class for instance validation failures."""


class FormatError(InstanceError):
    """Malformed file syntax or wrong field types."""


class BipartitionError(InstanceError):
    """An edge does not connect S0 to S1 (or references an unknown agent)."""


class DuplicateEdgeError(InstanceError):
    """The same unordered edge appears more than once."""


class LearningConstantError(InstanceError):
    """A learning constant is outside [0, 1) or the vector has wrong length."""


class WellBehavedInfeasibleError(InstanceError):
    """No c in [0, 1) can satisfy c >= 1/d for a degree-1 agent."""


@dataclass(frozen=True)
class Instance:
    """Immutable bipartite game instance.

    edges are stored normalized as (u, v) with u in S0 and v in S1,
    sorted lexicographically. Safe to share across threads.
    """

    n0: int
    n1: int
    edges: tuple[tuple[int, int], ...]
    c: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n0 < 1 or self.n1 < 1:
            raise FormatError(f"part sizes must be >= 1, got n0={self.n0}, n1={self.n1}")
        n = self.n0 + self.n1
        if len(self.c) != n:
            raise LearningConstantError(
                f"expected {n} learning constants, got {len(self.c)}"
            )
        for i, ci in enumerate(self.c, start=1):
            if not (0.0 <= ci < 1.0):
                raise LearningConstantError(f"c[{i}] = {ci} outside [0, 1)")
        normalized = []
        seen = set()
        for idx, (a, b) in enumerate(self.edges):
            u, v = (a, b) if a <= b else (b, a)
            if not (1 <= u <= self.n0 and self.n0 < v <= n):
                raise BipartitionError(
                    f"edge #{idx} ({a}, {b}) does not connect S0=1..{self.n0} "
                    f"to S1={self.n0 + 1}..{n}"
                )
            if (u, v) in seen:
                raise DuplicateEdgeError(f"edge #{idx} ({u}, {v}) appears twice")
            seen.add((u, v))
            normalized.append((u, v))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    @property
    def s0(self) -> range:
        return range(1, self.n0 + 1)

    @property
    def s1(self) -> range:
        return range(self.n0 + 1, self.n + 1)

    def side(self, agent: int) -> int:
        return 0 if agent <= self.n0 else 1

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        """Neighbor lists indexed by agent-1, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u - 1].append(v)
            adj[v - 1].append(u)
        return tuple(tuple(sorted(row)) for row in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.neighbors)

    def degree(self, agent: int) -> int:
        return self.degrees[agent - 1]

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency, row/col index = agent-1. Read-only."""
        mat = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self.edges:
            mat[u - 1, v - 1] = 1.0
            mat[v - 1, u - 1] = 1.0
        mat.setflags(write=False)
        return mat

    @cached_property
    def edge_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoints as two parallel 0-based index arrays. Read-only."""
        if self.edges:
            us = np.array([u - 1 for u, _ in self.edges], dtype=np.intp)
            vs = np.array([v - 1 for _, v in self.edges], dtype=np.intp)
        else:
            us = np.empty(0, dtype=np.intp)
            vs = np.empty(0, dtype=np.intp)
        us.setflags(write=False)
        vs.setflags(write=False)
        return us, vs

    @cached_property
    def c_array(self) -> np.ndarray:
        arr = np.asarray(self.c, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def with_c(self, c: tuple[float, ...]) -> "Instance":
        """Same topology, different learning constants."""
        return Instance(self.n0, self.n1, self.edges, tuple(c))


class CMode(Enum):
    """How learning constants are sampled.

    UNIFORM01 draws c_i uniform on [0, 1). WELL_BEHAVED draws c_i uniform
    on [1/d_i, 1) so no agent prefers action 1 unconditionally; isolated
    agents (d_i = 0) fall back to uniform [0, 1). Degree-1 agents make the
    well-behaved interval [1, 1) empty, which is rejected.
    """

    UNIFORM01 = "uniform01"
    WELL_BEHAVED = "wellbehaved"


def _draw_c(rng: np.random.Generator, degrees: tuple[int, ...], c_mode: CMode) -> tuple[float, ...]:
    u = rng.random(len(degrees))
    if c_mode is CMode.UNIFORM01:
        return tuple(u.tolist())
    bad = [i + 1 for i, d in enumerate(degrees) if d == 1]
    if bad:
        raise WellBehavedInfeasibleError(
            f"degree-1 agents {bad} admit no c in [1/d, 1); "
            "well-behaved sampling needs every degree to be 0 or >= 2"
        )
    lo = np.array([0.0 if d == 0 else 1.0 / d for d in degrees])
    return tuple((lo + u * (1.0 - lo)).tolist())


def generate_random(n0: int, n1: int, p: float, c_mode: CMode, seed: int) -> Instance:
    """Seeded bipartite Erdos-Renyi instance.

    Each of the n0*n1 cross pairs is an edge independently with probability
    p. Both the edge draws and the constant draws derive from ``seed`` (one
    PCG64 stream, edges first), so equal seeds give bit-identical instances.
    """
    if n0 < 1 or n1 < 1:
        raise ValueError(f"part sizes must be >= 1, got n0={n0}, n1={n1}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    mask = rng.random((n0, n1)) < p
    rows, cols = np.nonzero(mask)
    edges = tuple((int(i) + 1, n0 + int(j) + 1) for i, j in zip(rows, cols))
    degrees = [0] * (n0 + n1)
    for u, v in edges:
        degrees[u - 1] += 1
        degrees[v - 1] += 1
    c = _draw_c(rng, tuple(degrees), c_mode)
    return Instance(n0=n0, n1=n1, edges=edges, c=c)


def random_well_behaved(
    n0: int, n1: int, p: float, seed: int, min_degree: int = 2, max_attempts: int = 1000
) -> Instance:
    """Well-behaved random instance with every degree >= min_degree.

    Resamples the topology under deterministic child seeds until the degree
    floor holds (degree-1 agents admit no well-behaved constant; isolated
    agents play 1 unconditionally, which the well-behaved theory excludes).
    """
    for attempt in range(max_attempts):
        inst = generate_random(n0, n1, p, CMode.UNIFORM01, child_seed(seed, attempt))
        if min(inst.degrees) >= min_degree:
            rng = np.random.default_rng(child_seed(seed, attempt, 1))
            return inst.with_c(_draw_c(rng, inst.degrees, CMode.WELL_BEHAVED))
    raise WellBehavedInfeasibleError(
        f"no topology with min degree {min_degree} in {max_attempts} attempts "
        f"for n0={n0}, n1={n1}, p={p}"
    )


def draw_well_behaved_c(inst: Instance, rng: np.random.Generator) -> Instance:
    """Redraw constants uniform on [1/d_i, 1) over a fixed topology."""
    return inst.with_c(_draw_c(rng, inst.degrees, CMode.WELL_BEHAVED))


def is_well_behaved(inst: Instance) -> bool:
    """True iff c_i >= 1/d_i for every agent with at least one neighbor."""
    return all(
        c >= 1.0 / d for c, d in zip(inst.c, inst.degrees) if d >= 1
    )


def serialize_instance(inst: Instance) -> str:
    """UTF-8 JSON text; edges sorted for reproducible bytes."""
    payload = {
        "n0": inst.n0,
        "n1": inst.n1,
        "edges": [[u, v] for u, v in inst.edges],
        "c": list(inst.c),
    }
    return json.dumps(payload)


_REQUIRED_KEYS = ("n0", "n1", "edges", "c")


def parse_instance(text: str) -> Instance:
    """Parse and fully re-validate the JSON instance format.

    Raises FormatError for syntax/type problems, BipartitionError,
    DuplicateEdgeError, or LearningConstantError for semantic ones; every
    message names the offending edge index or agent.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise FormatError(f"expected a JSON object, got {type(raw).__name__}")
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise FormatError(f"missing keys: {', '.join(missing)}")
    unknown = [k for k in raw if k not in _REQUIRED_KEYS]
    if unknown:
        raise FormatError(f"unknown keys: {', '.join(unknown)}")
    n0, n1 = raw["n0"], raw["n1"]
    if not isinstance(n0, int) or not isinstance(n1, int):
        raise FormatError("n0 and n1 must be integers")
    if not isinstance(raw["edges"], list) or not isinstance(raw["c"], list):
        raise FormatError("edges and c must be arrays")
    edges = []
    for idx, pair in enumerate(raw["edges"]):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, int) for x in pair)
        ):
            raise FormatError(f"edge #{idx} must be a pair of integers, got {pair!r}")
        edges.append((pair[0], pair[1]))
    c = []
    for k, val in enumerate(raw["c"]):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise FormatError(f"c[{k}] (agent {k + 1}) must be a number, got {val!r}")
        c.append(float(val))
    return Instance(n0=n0, n1=n1, edges=tuple(edges), c=tuple(c))


def fig1() -> Instance:
    """Built-in 4x4 well-behaved reference instance.

    Anchors the deterministic tests: with agents 3 and 4 controlled the
    dynamics settle with ones on {6, 7, 8}, and controlling agent 1 alone
    cascades to the full cut (zeros {1,2,3,4}, ones {5,6,7,8}).
    """
    return Instance(
        n0=4,
        n1=4,
        edges=(
            (1, 5), (1, 6), (1, 7),
            (2, 5), (2, 8),
            (3, 6), (3, 7), (3, 8),
            (4, 5), (4, 7), (4, 8),
        ),
        c=(0.41, 0.55, 0.57, 0.86, 0.92, 0.60, 0.34, 0.39),
    )


def complete_bipartite(n0: int, n1: int, fill_c: float = 0.5) -> Instance:
    """Complete bipartite topology K_{n0,n1} with constant c (default 0.5)."""
    edges = tuple((u, v) for u in range(1, n0 + 1) for v in range(n0 + 1, n0 + n1 + 1))
    return Instance(n0=n0, n1=n1, edges=edges, c=(fill_c,) * (n0 + n1))


def child_seed(master_seed: int, *path: int) -> int:
    """Deterministic 64-bit child seed for stream splitting.

    Task k of a sweep (or draw k of a verifier) seeds its own generator
    with child_seed(master, ...k), so parallel execution cannot reorder
    draws. Backed by numpy's SeedSequence.
    """
    ss = np.random.SeedSequence([int(master_seed), *[int(x) for x in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def prob_key(p: float) -> int:
    """Integer encoding of an edge probability for seed paths (micro-units)."""
    return int(round(p * 1_000_000))


def edges_incident(inst: Instance, agents: frozenset[int] | set[int]) -> int:
    """Number of edges with at least one endpoint in ``agents``."""
    return sum(1 for u, v in inst.edges if u in agents or v in agents)
