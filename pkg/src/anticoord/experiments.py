"""Sweep harness: greedy vs brute force over sizes and edge probabilities.

Each (size, probability, sample) cell draws one instance from a child seed
of the master seed; both methods solve the same instance (paired design).
Records are canonically ordered, so the CSV is identical no matter how
many workers ran the sweep.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

from .instance import CMode, Instance, child_seed, generate_random, prob_key
from .solver import (
    DEFAULT_ENUMERATION_CAP,
    EnumerationCapError,
    SideRestriction,
    brute_force,
    converge_steps,
    greedy,
)

__all__ = [
    "SweepConfig",
    "ExperimentRecord",
    "CSV_HEADER",
    "sweep",
    "write_csv",
    "write_manifest",
    "cell_means",
    "write_means_csv",
]

log = logging.getLogger(__name__)

DEFAULT_SEED = 1729

CSV_HEADER = "n,p,sample,seed,budget,method,f,edges,ratio,runtime_ms,steps"

MEANS_HEADER = "n,p,method,mean_ratio,mean_runtime_ms,samples"

_METHODS = ("greedy", "brute")


def budget_for(n: int) -> int:
    """Control budget rule: one agent per ten, rounded up."""
    return math.ceil(n / 10)


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple[int, ...] = tuple(range(4, 44, 4))
    probs: tuple[float, ...] = (0.3, 0.8)
    samples_per_cell: int = 40
    c_mode: CMode = CMode.UNIFORM01
    side: SideRestriction = SideRestriction.ANY_SIDE
    master_seed: int = DEFAULT_SEED
    methods: tuple[str, ...] = _METHODS
    jobs: int = 1
    brute_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self) -> None:
        for n in self.sizes:
            if n < 2 or n % 2:
                raise ValueError(f"sizes must be even and >= 2, got {n}")
        for p in self.probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p} outside [0, 1]")
        if self.samples_per_cell < 1:
            raise ValueError("samples_per_cell must be >= 1")
        unknown = [m for m in self.methods if m not in _METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {_METHODS}")

    def as_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "probs": list(self.probs),
            "samples_per_cell": self.samples_per_cell,
            "c_mode": self.c_mode.value,
            "side": self.side.value,
            "master_seed": self.master_seed,
            "methods": list(self.methods),
            "jobs": self.jobs,
            "brute_cap": self.brute_cap,
            "budget_rule": "ceil(n/10)",
            "seed_scheme": "instance seed = child_seed(master_seed, n, round(p*1e6), sample)",
        }


@dataclass(frozen=True)
class ExperimentRecord:
    """One (instance, method) result row."""

    n: int
    p: float
    sample_index: int
    seed: int
    budget: int
    method: str
    f_value: int
    total_edges: int
    inactivation_ratio: float
    runtime_ms: float
    converge_steps: int

    @property
    def degenerate(self) -> bool:
        """True when the instance had no edges; ratio is recorded as 0."""
        return self.total_edges == 0

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.n),
                repr(self.p),
                str(self.sample_index),
                str(self.seed),
                str(self.budget),
                self.method,
                str(self.f_value),
                str(self.total_edges),
                repr(self.inactivation_ratio),
                repr(self.runtime_ms),
                str(self.converge_steps),
            ]
        )


def _solve_cell(cfg_tuple: tuple, task: tuple[int, float, int]) -> list[ExperimentRecord]:
    c_mode_v, side_v, master_seed, methods, cap = cfg_tuple
    n, p, sample = task
    inst_seed = child_seed(master_seed, n, prob_key(p), sample)
    inst = generate_random(n // 2, n // 2, p, CMode(c_mode_v), inst_seed)
    budget = budget_for(n)
    side = SideRestriction(side_v)
    records = []
    for method in methods:
        start = time.perf_counter()
        try:
            if method == "greedy":
                g = greedy(inst, budget, side)
                result_set, f_value = g.picks, g.final_value
            else:
                opt = brute_force(inst, budget, side, cap=cap)
                result_set, f_value = opt.best_set, opt.best_value
        except EnumerationCapError as exc:
            log.warning("skipping n=%d p=%s sample=%d method=%s: %s", n, p, sample, method, exc)
            continue
        runtime_ms = (time.perf_counter() - start) * 1000.0
        edges = len(inst.edges)
        records.append(
            ExperimentRecord(
                n=n,
                p=p,
                sample_index=sample,
                seed=inst_seed,
                budget=budget,
                method=method,
                f_value=f_value,
                total_edges=edges,
                inactivation_ratio=f_value / edges if edges else 0.0,
                runtime_ms=runtime_ms,
                converge_steps=converge_steps(inst, result_set),
            )
        )
    return records


def sweep(cfg: SweepConfig) -> list[ExperimentRecord]:
    """Run the full grid; returns records sorted by (n, p, sample, method).

    Brute-force cells beyond the enumeration cap are skipped with a warning,
    never approximated. Reproducible from the master seed alone (timing
    fields excepted, being wall-clock measurements).
    """
    tasks = [
        (n, p, k)
        for n in cfg.sizes
        for p in cfg.probs
        for k in range(cfg.samples_per_cell)
    ]
    cfg_tuple = (cfg.c_mode.value, cfg.side.value, cfg.master_seed, cfg.methods, cfg.brute_cap)
    if cfg.jobs <= 1:
        nested = [_solve_cell(cfg_tuple, t) for t in tasks]
    else:
        worker = partial(_solve_cell, cfg_tuple)
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            nested = list(
                pool.map(worker, tasks, chunksize=max(1, len(tasks) // (cfg.jobs * 4)))
            )
    records = [rec for group in nested for rec in group]
    records.sort(key=lambda r: (r.n, r.p, r.sample_index, r.method))
    return records


def write_csv(records: Sequence[ExperimentRecord], path: str) -> None:
    """Fixed-header CSV, period decimal separator, one row per record."""
    if not records:
        raise ValueError("refusing to write an empty record list")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                fh.write(rec.csv_row() + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def write_manifest(cfg: SweepConfig, csv_path: str, record_count: int) -> str:
    """Companion JSON manifest next to the CSV; returns its path."""
    path = csv_path + ".manifest.json"
    payload = dict(cfg.as_dict(), csv=csv_path, records=record_count)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest to {path}: {exc}") from exc
    return path


def cell_means(records: Sequence[ExperimentRecord]) -> list[tuple[int, float, str, float, float, int]]:
    """Per-(n, p, method) mean ratio and runtime, canonically ordered."""
    groups: dict[tuple[int, float, str], list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.n, rec.p, rec.method), []).append(rec)
    out = []
    for (n, p, method) in sorted(groups):
        cell = groups[(n, p, method)]
        out.append(
            (
                n,
                p,
                method,
                sum(r.inactivation_ratio for r in cell) / len(cell),
                sum(r.runtime_ms for r in cell) / len(cell),
                len(cell),
            )
        )
    return out


def write_means_csv(records: Sequence[ExperimentRecord], path: str) -> None:
    """Means-only export used to cross-check downstream consumers."""
    if not records:
        raise ValueError("refusing to write an empty record list")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MEANS_HEADER + "\n")
        for n, p, method, mean_ratio, mean_ms, count in cell_means(records):
            fh.write(f"{n},{p!r},{method},{mean_ratio!r},{mean_ms!r},{count}\n")
