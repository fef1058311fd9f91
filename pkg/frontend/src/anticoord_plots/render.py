"""Render sweep CSVs into the two standard figures.

Reads only the experiment CSV (and its optional .manifest.json sidecar for
the seed footer); never computes game results itself. The `ratio` figure
plots per-cell mean inactivation ratio against network size, one series
per (edge probability, method); the `timing` figure plots mean greedy
build time against size, one series per probability, annotated with the
power-law exponent fitted from the data.

Exit codes mirror the main CLI: 0 success, 1 refusal (nothing to plot),
2 schema/I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED_HEADER = "n,p,sample,seed,budget,method,f,edges,ratio,runtime_ms,steps"

KNOWN_METHODS = ("brute", "greedy")


class SchemaError(ValueError):
    """CSV header or field contents do not match the sweep schema."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str  # "ratio" | "timing"
    out_path: str
    confidence: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("ratio", "timing"):
            raise ValueError(f"unknown figure kind {self.kind!r}")


@dataclass(frozen=True)
class Row:
    n: int
    p: float
    sample: int
    method: str
    ratio: float
    runtime_ms: float


def read_rows(csv_path: str) -> list[Row]:
    with open(csv_path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != EXPECTED_HEADER:
        raise SchemaError(
            f"{csv_path}: header mismatch; expected {EXPECTED_HEADER!r}, "
            f"got {lines[0] if lines else '<empty file>'!r}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise SchemaError(f"{csv_path}:{lineno}: expected 11 fields, got {len(parts)}")
        try:
            row = Row(
                n=int(parts[0]),
                p=float(parts[1]),
                sample=int(parts[2]),
                method=parts[5],
                ratio=float(parts[8]),
                runtime_ms=float(parts[9]),
            )
        except ValueError as exc:
            raise SchemaError(f"{csv_path}:{lineno}: {exc}") from None
        if row.method not in KNOWN_METHODS:
            raise SchemaError(f"{csv_path}:{lineno}: unknown method {row.method!r}")
        rows.append(row)
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")
    return rows


def manifest_seed(csv_path: str) -> int | None:
    try:
        with open(csv_path + ".manifest.json", "r", encoding="utf-8") as fh:
            return json.load(fh).get("master_seed")
    except (OSError, json.JSONDecodeError):
        return None


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def _se(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = _mean(values)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return math.sqrt(var / len(values))


def ratio_series(rows: list[Row]) -> dict[tuple[float, str], list[tuple[int, float, float]]]:
    """(p, method) -> [(n, mean ratio, ratio se)] sorted by n."""
    cells: dict[tuple[float, str, int], list[float]] = {}
    for row in rows:
        cells.setdefault((row.p, row.method, row.n), []).append(row.ratio)
    series: dict[tuple[float, str], list[tuple[int, float, float]]] = {}
    for (p, method, n) in sorted(cells):
        vals = cells[(p, method, n)]
        series.setdefault((p, method), []).append((n, _mean(vals), _se(vals)))
    return series


def timing_series(rows: list[Row]) -> dict[float, list[tuple[int, float, float]]]:
    """p -> [(n, mean greedy runtime_ms, se)] sorted by n."""
    cells: dict[tuple[float, int], list[float]] = {}
    for row in rows:
        if row.method == "greedy":
            cells.setdefault((row.p, row.n), []).append(row.runtime_ms)
    if not cells:
        raise SchemaError("no greedy rows; the timing figure needs greedy runtimes")
    series: dict[float, list[tuple[int, float, float]]] = {}
    for (p, n) in sorted(cells):
        vals = cells[(p, n)]
        series.setdefault(p, []).append((n, _mean(vals), _se(vals)))
    return series


def fitted_power(points: list[tuple[int, float, float]]) -> float | None:
    """Least-squares slope of log(time) vs log(n); needs 2+ distinct sizes."""
    pts = [(math.log(n), math.log(t)) for n, t, _ in points if t > 0]
    if len(pts) < 2:
        return None
    mx = _mean([x for x, _ in pts])
    my = _mean([y for _, y in pts])
    den = sum((x - mx) ** 2 for x, _ in pts)
    if den == 0:
        return None
    return sum((x - mx) * (y - my) for x, y in pts) / den


def _footer(csv_path: str) -> str:
    seed = manifest_seed(csv_path)
    base = os.path.basename(csv_path)
    return f"{base} | seed {seed}" if seed is not None else f"{base} | seed unknown"


def render(spec: FigureSpec) -> None:
    """Draw the figure and write it to spec.out_path."""
    rows = read_rows(spec.csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    if spec.kind == "ratio":
        for (p, method), points in sorted(ratio_series(rows).items()):
            ns = [n for n, _, _ in points]
            means = [m for _, m, _ in points]
            if spec.confidence:
                errs = [1.96 * se for _, _, se in points]
                ax.errorbar(ns, means, yerr=errs, marker="o", capsize=3,
                            label=f"{method}, p={p:g}")
            else:
                ax.plot(ns, means, marker="o", label=f"{method}, p={p:g}")
        ax.set_ylabel("mean inactivation ratio (inactive / total edges)")
        ax.set_ylim(0.0, 1.0)
    else:
        for p, points in sorted(timing_series(rows).items()):
            ns = [n for n, _, _ in points]
            means = [m for _, m, _ in points]
            label = f"greedy, p={p:g}"
            power = fitted_power(points)
            if power is not None:
                label += f" (fitted n^{power:.2f})"
            if spec.confidence:
                errs = [1.96 * se for _, _, se in points]
                ax.errorbar(ns, means, yerr=errs, marker="s", capsize=3, label=label)
            else:
                ax.plot(ns, means, marker="s", label=label)
        ax.set_ylabel("mean greedy build time (ms)")
    ax.set_xlabel("network size n (agents)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.text(0.99, 0.01, _footer(spec.csv_path), ha="right", va="bottom", fontsize=7, alpha=0.7)
    fig.tight_layout(rect=(0, 0.03, 1, 1))
    try:
        fig.savefig(spec.out_path)
    except OSError as exc:
        raise OSError(f"cannot write figure to {spec.out_path}: {exc}") from exc
    finally:
        plt.close(fig)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figs", description="Render anticoord sweep CSVs into figures."
    )
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument("--kind", choices=["ratio", "timing"], required=True)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--ci", action="store_true", help="add 95%% confidence intervals")
    ns = parser.parse_args(sys.argv[1:] if argv is None else argv)
    try:
        render(FigureSpec(csv_path=ns.csv, kind=ns.kind, out_path=ns.out, confidence=ns.ci))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {ns.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
