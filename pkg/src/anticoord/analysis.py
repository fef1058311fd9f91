"""One-step influence, shadow constants, and Monte-Carlo property checks.

The checks here verify, empirically, the structural results the solver
relies on: near-submodularity of the one-step influence on dense graphs,
submodularity in expectation of the objective, distribution-equivalence
of the selection-rule process, and the greedy performance bound. Each
check is seeded and parallelism-safe: draw k always uses the generator
derived from child_seed(seed, k), so results never depend on worker
count or execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .dynamics import (
    _UND,
    _ZERO,
    Action,
    _converge_batch,
    initial_profile,
    run,
    run_selection_rule,
    step,
)
from .instance import Instance, child_seed, draw_well_behaved_c, edges_incident
from .solver import SideRestriction, brute_force, greedy, objective

__all__ = [
    "InfluenceMethod",
    "InfluenceQuery",
    "ViolationReport",
    "BoundReport",
    "DistanceReport",
    "influence",
    "shadow_constant",
    "check_influence_submodularity",
    "check_expected_submodularity",
    "check_selection_rule_distribution",
    "check_greedy_bound",
]


class InfluenceMethod(Enum):
    DIRECT = "direct"
    CLOSED_FORM = "closed-form"


@dataclass(frozen=True)
class InfluenceQuery:
    """Influence target v (in S0, undecided) and zero-set S (in S0, v not in S)."""

    v: int
    zero_set: frozenset[int]

    def validate(self, inst: Instance) -> None:
        if not (1 <= self.v <= inst.n0):
            raise ValueError(f"influence target {self.v} must lie in S0")
        outside = [i for i in self.zero_set if not (1 <= i <= inst.n0)]
        if outside:
            raise ValueError(f"zero-set members {sorted(outside)} lie outside S0")
        if self.v in self.zero_set:
            raise ValueError(f"influence target {self.v} must not be in the zero-set")


def _influence_direct(inst: Instance, v: int, zero_set: frozenset[int]) -> int:
    """Definitional route: simulate one dynamics step from the zero-set and
    count v's neighbors that committed to 1."""
    after = step(inst, initial_profile(inst, zero_set))
    return sum(1 for j in inst.neighbors[v - 1] if after.action(j) is Action.ONE)


def _influence_closed_form(inst: Instance, v: int, zero_set: frozenset[int]) -> int:
    """Closed-form route: neighbor j of v is forced to 1 exactly when
    1 - c_j * |n(j) \\ zero_set| stays positive."""
    count = 0
    for j in inst.neighbors[v - 1]:
        ceil_sum = sum(1 for i in inst.neighbors[j - 1] if i not in zero_set)
        if 1.0 - inst.c[j - 1] * ceil_sum > 0.0:
            count += 1
    return count


def influence(
    inst: Instance, query: InfluenceQuery, method: InfluenceMethod = InfluenceMethod.CLOSED_FORM
) -> int:
    """Number of v's neighbors forced to play 1 one step after the zero-set.

    The two methods agree on well-behaved instances (and, with this
    engine, everywhere the query is valid); keeping both routes lets the
    test suite check one against the other.
    """
    query.validate(inst)
    if method is InfluenceMethod.DIRECT:
        return _influence_direct(inst, query.v, query.zero_set)
    return _influence_closed_form(inst, query.v, query.zero_set)


def shadow_constant(c_v: float, d_v: int, f_ref: int) -> float:
    """Reflection 1/d_v + 1/f_ref - c_v of a learning constant.

    Maps [1/d_v, 1/f_ref] onto itself and is an involution, which is what
    makes the selection rule distribution-preserving. f_ref = 0 has no
    shadow; callers must apply the zero-influence guard instead.
    """
    if d_v < 1:
        raise ValueError(f"degree must be >= 1, got {d_v}")
    if f_ref < 1:
        raise ValueError(
            f"reference influence must be >= 1, got {f_ref} "
            "(zero influence has no shadow; the selection rule never fires there)"
        )
    lo, hi = 1.0 / d_v, 1.0 / f_ref
    if not (lo <= c_v <= hi):
        raise ValueError(f"c={c_v} outside the shadow interval [{lo}, {hi}]")
    return lo + hi - c_v


def _descriptor(inst: Instance) -> str:
    return f"bipartite(n0={inst.n0},n1={inst.n1},edges={len(inst.edges)})"


@dataclass(frozen=True)
class ViolationReport:
    """Counted submodularity violations against the analytic range bound."""

    trials: int
    violations: int
    rate: float
    analytic_bound: float
    min_degree: int
    seed: int
    topology: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    """One-sided Monte-Carlo comparison lhs >= rhs with 2-SE slack."""

    lhs_mean: float
    rhs_mean: float
    lhs_se: float
    rhs_se: float
    draws: int
    passed: bool
    seed: int
    topology: str
    min_degree: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass(frozen=True)
class DistanceReport:
    """Distance between final zero-set distributions of two processes."""

    draws: int
    tv_distance: float
    lhs_mean: float
    rhs_mean: float
    lhs_se: float
    rhs_se: float
    exact_sets: bool
    seed: int
    topology: str

    def as_dict(self) -> dict:
        return asdict(self)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _forced(inst: Instance, w: int, zero_set: set[int]) -> bool:
    ceil_sum = sum(1 for i in inst.neighbors[w - 1] if i not in zero_set)
    return inst.c[w - 1] * ceil_sum < 1.0


def check_influence_submodularity(
    inst: Instance, trials: int, seed: int, max_set_size: int = 4
) -> ViolationReport:
    """Estimate how often the one-step influence violates diminishing returns.

    Per trial: redraw well-behaved constants on the fixed topology, draw
    nested zero-sets S inside S', an extra agent u and a target v (all in
    S0), pick a shared neighbor w of v and u, and flag a violation when
    the marginal effect of u at w is larger under the bigger set S'. The
    violating constant range for w has width at most
    (1/(s'-1) - 1/s') * d_w/(d_w - 1) with s' = |n(w) \\ S'|; the report
    carries that bound maximized over the sampled trials.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if inst.n0 < 3:
        raise ValueError("need |S0| >= 3 to draw S', u and v")
    violations = 0
    bound = 0.0
    min_degree = 0
    s0 = list(inst.s0)
    for k in range(trials):
        rng = np.random.default_rng(child_seed(seed, k))
        wb = draw_well_behaved_c(inst, rng)
        v = int(rng.choice(s0))
        others = [i for i in s0 if i != v]
        size = int(rng.integers(1, min(max_set_size, inst.n0 - 2) + 1))
        sprime = set(int(x) for x in rng.choice(others, size=size, replace=False))
        s = {i for i in sprime if rng.random() < 0.5}
        remaining = [i for i in others if i not in sprime]
        u = int(rng.choice(remaining))
        common = sorted(set(wb.neighbors[v - 1]) & set(wb.neighbors[u - 1]))
        if not common:
            continue  # u influences no neighbor of v; equality is automatic
        w = int(rng.choice(common))
        d_w = wb.degree(w)
        min_degree = d_w if min_degree == 0 else min(min_degree, d_w)
        gain_small = int(_forced(wb, w, s | {u})) - int(_forced(wb, w, s))
        gain_large = int(_forced(wb, w, sprime | {u})) - int(_forced(wb, w, sprime))
        if gain_small < gain_large:
            violations += 1
        s_prime_ceil = sum(1 for i in wb.neighbors[w - 1] if i not in sprime)
        if s_prime_ceil >= 2 and d_w >= 2:
            b = (1.0 / (s_prime_ceil - 1) - 1.0 / s_prime_ceil) * d_w / (d_w - 1)
            bound = max(bound, b)
    return ViolationReport(
        trials=trials,
        violations=violations,
        rate=violations / trials,
        analytic_bound=bound,
        min_degree=min_degree,
        seed=seed,
        topology=_descriptor(inst),
    )


def _well_behaved_c_matrix(topology: Instance, draws: int, seed: int) -> np.ndarray:
    cols = []
    for k in range(draws):
        rng = np.random.default_rng(child_seed(seed, k))
        cols.append(draw_well_behaved_c(topology, rng).c_array)
    return np.stack(cols, axis=1)


def _batch_objectives(topology: Instance, c_matrix: np.ndarray, control: frozenset[int]) -> np.ndarray:
    n, draws = c_matrix.shape
    pinned = np.zeros((n, 1), dtype=bool)
    for i in control:
        pinned[i - 1, 0] = True
    codes = np.full((n, draws), _UND, dtype=np.int8)
    codes[np.broadcast_to(pinned, codes.shape)] = _ZERO
    final, _ = _converge_batch(topology.adjacency_matrix, c_matrix, codes, pinned, topology.n + 2)
    us, vs = topology.edge_index
    nonzero = final != _ZERO
    return len(topology.edges) - np.sum(nonzero[us, :] & nonzero[vs, :], axis=0)


def check_expected_submodularity(
    topology: Instance, a: Iterable[int], b: Iterable[int], draws: int, seed: int
) -> BoundReport:
    """Compare E[f(A) + f(B)] against E[f(A|B) + f(A&B)] over well-behaved
    constant draws on a fixed topology.

    The guarantee is asymptotic in degree; min_degree in the report tells
    the caller how far the topology is from that regime (the comparison is
    informative-only on sparse graphs).
    """
    if draws < 30:
        raise ValueError("need at least 30 draws for a meaningful standard error")
    set_a = frozenset(int(i) for i in a)
    set_b = frozenset(int(i) for i in b)
    for name, s in (("A", set_a), ("B", set_b)):
        if not s <= set(topology.s0):
            raise ValueError(f"control set {name} must lie inside S0")
    c_matrix = _well_behaved_c_matrix(topology, draws, seed)
    f_a = _batch_objectives(topology, c_matrix, set_a)
    f_b = _batch_objectives(topology, c_matrix, set_b)
    f_union = _batch_objectives(topology, c_matrix, set_a | set_b)
    f_inter = _batch_objectives(topology, c_matrix, set_a & set_b)
    lhs_mean, lhs_se = _mean_se(f_a + f_b)
    rhs_mean, rhs_se = _mean_se(f_union + f_inter)
    return BoundReport(
        lhs_mean=lhs_mean,
        rhs_mean=rhs_mean,
        lhs_se=lhs_se,
        rhs_se=rhs_se,
        draws=draws,
        passed=lhs_mean + 2.0 * (lhs_se + rhs_se) >= rhs_mean,
        seed=seed,
        topology=_descriptor(topology),
        min_degree=min(topology.degrees),
    )


def _selection_rule_draw(
    topology: Instance,
    partition: tuple[tuple[int, ...], ...],
    tail: tuple[int, ...],
    seed: int,
    k: int,
) -> tuple[frozenset[int], frozenset[int]]:
    rng = np.random.default_rng(child_seed(seed, k))
    wb = draw_well_behaved_c(topology, rng)
    union = frozenset().union(*[frozenset(c) for c in partition]) if partition else frozenset()
    direct = run(wb, union | frozenset(tail)).final.zeros
    shadow = run_selection_rule(wb, partition, tail).final.zeros
    return direct, shadow


def _map_draws(worker: Callable[[int], object], draws: int, jobs: int) -> list:
    if jobs <= 1:
        return [worker(k) for k in range(draws)]
    chunk = max(1, draws // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, range(draws), chunksize=chunk))


def check_selection_rule_distribution(
    topology: Instance,
    partition: Sequence[Iterable[int]],
    tail: Iterable[int],
    draws: int,
    seed: int,
    jobs: int = 1,
) -> DistanceReport:
    """Total-variation distance between the final zero-set distributions of
    plain control (union of partition plus tail) and the selection-rule
    process, over shared well-behaved constant draws.

    Distributions are histogrammed over zero-set identities when |S0| <= 10
    and over the scalar objective value otherwise.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    part = tuple(tuple(sorted(int(i) for i in cell)) for cell in partition)
    tail_t = tuple(sorted(int(i) for i in tail))
    worker = partial(_selection_rule_draw, topology, part, tail_t, seed)
    pairs = _map_draws(worker, draws, jobs)
    exact = topology.n0 <= 10
    counts_a: dict = {}
    counts_b: dict = {}
    f_a = np.empty(draws)
    f_b = np.empty(draws)
    for k, (za, zb) in enumerate(pairs):
        f_a[k] = edges_incident(topology, za)
        f_b[k] = edges_incident(topology, zb)
        key_a = za if exact else f_a[k]
        key_b = zb if exact else f_b[k]
        counts_a[key_a] = counts_a.get(key_a, 0) + 1
        counts_b[key_b] = counts_b.get(key_b, 0) + 1
    keys = set(counts_a) | set(counts_b)
    tv = 0.5 * sum(abs(counts_a.get(k, 0) - counts_b.get(k, 0)) for k in keys) / draws
    lhs_mean, lhs_se = _mean_se(f_a)
    rhs_mean, rhs_se = _mean_se(f_b)
    return DistanceReport(
        draws=draws,
        tv_distance=tv,
        lhs_mean=lhs_mean,
        rhs_mean=rhs_mean,
        lhs_se=lhs_se,
        rhs_se=rhs_se,
        exact_sets=exact,
        seed=seed,
        topology=_descriptor(topology),
    )


def _greedy_bound_draw(
    topology: Instance, r: int, side_value: str, seed: int, k: int
) -> tuple[int, int, int]:
    rng = np.random.default_rng(child_seed(seed, k))
    wb = draw_well_behaved_c(topology, rng)
    side = SideRestriction(side_value)
    g = greedy(wb, r, side).final_value
    o = brute_force(wb, r, side).best_value
    empty = objective(wb, frozenset())
    return g, o, empty


def check_greedy_bound(
    topology: Instance,
    r: int,
    draws: int,
    seed: int,
    side: SideRestriction = SideRestriction.S0_ONLY,
    jobs: int = 1,
) -> BoundReport:
    """Monte-Carlo check of the greedy guarantee

        E f(greedy_r) >= (1 - 1/e) E f(opt_r) + (1/e)(1 - 1/r) E f(empty)

    over well-behaved constant draws. The f(empty) term is kept even though
    it vanishes for well-behaved draws, so the same comparison serves
    constant regimes where no-control runs already deactivate edges.
    """
    if draws < 2:
        raise ValueError("draws must be >= 2")
    pool = side.pool(topology)
    if r < 1 or r > len(pool):
        raise ValueError(f"budget {r} outside 1..{len(pool)}")
    worker = partial(_greedy_bound_draw, topology, r, side.value, seed)
    results = _map_draws(worker, draws, jobs)
    g_vals = np.array([g for g, _, _ in results], dtype=np.float64)
    o_vals = np.array([o for _, o, _ in results], dtype=np.float64)
    e_vals = np.array([e for _, _, e in results], dtype=np.float64)
    g_mean, g_se = _mean_se(g_vals)
    o_mean, o_se = _mean_se(o_vals)
    e_mean, e_se = _mean_se(e_vals)
    w_opt = 1.0 - 1.0 / math.e
    w_empty = (1.0 / math.e) * (1.0 - 1.0 / r)
    rhs_mean = w_opt * o_mean + w_empty * e_mean
    rhs_se = w_opt * o_se + w_empty * e_se
    return BoundReport(
        lhs_mean=g_mean,
        rhs_mean=rhs_mean,
        lhs_se=g_se,
        rhs_se=rhs_se,
        draws=draws,
        passed=g_mean + 2.0 * (g_se + rhs_se) >= rhs_mean,
        seed=seed,
        topology=_descriptor(topology),
        min_degree=min(topology.degrees),
    )
