"""Monte Carlo harness: seeded session sweeps over parameter grids.

Each grid point runs many independent protocol sessions against the
eavesdropper and reports the fraction of trials that met the key-size
target, with a Wilson 95% interval and, where available, the closed-form
probability. Trials are seeded from (base_seed, grid index, trial index),
so results are a pure function of the spec, independent of worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, TextIO, Union

import numpy as np

from .adversary import RULE_ML, RULE_RANDOM, RULES, pg_closed_form
from .analysis import key_prob, secret_bit_prob
from .channel import delta_mean_pathloss
from .scenario import (
    ScenarioConfig,
    build_canonical_deployment,
    build_equidistant_deployment,
)

METRIC_PER_BIT = "per-bit-secret"
METRIC_WHOLE_KEY = "whole-key"
METRICS = (METRIC_PER_BIT, METRIC_WHOLE_KEY)

GEOMETRY_CANONICAL = "canonical"
GEOMETRY_EQUIDISTANT = "equidistant"
GEOMETRIES = (GEOMETRY_CANONICAL, GEOMETRY_EQUIDISTANT)

RESULT_COLUMNS = (
    "k",
    "n",
    "d_be",
    "sigma",
    "rule",
    "metric",
    "trials",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "p_analytic",
)


class BudgetError(ValueError):
    """Grid size times trials exceeds the configured simulation budget."""


@dataclass(frozen=True)
class GridPoint:
    index: int
    k: int
    n: int
    d_be: float
    sigma: float


@dataclass(frozen=True)
class SweepSpec:
    """Axes and execution parameters of one sweep."""

    k: tuple[int, ...]
    n_rounds: tuple[int, ...]
    d_be: tuple[float, ...]
    sigma: tuple[float, ...]
    trials: int = 2000
    base_seed: int = 0
    rule: str = RULE_ML
    metric: str = METRIC_PER_BIT
    geometry: str = GEOMETRY_CANONICAL
    budget: int = 50_000_000
    scenario: ScenarioConfig = ScenarioConfig()

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "n_rounds", tuple(int(v) for v in self.n_rounds))
        object.__setattr__(self, "d_be", tuple(float(v) for v in self.d_be))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.rule not in RULES:
            raise ValueError(f"unknown adversary rule {self.rule!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.grid_size * self.trials > self.budget:
            raise BudgetError(
                f"{self.grid_size} grid points x {self.trials} trials exceeds "
                f"budget {self.budget}"
            )

    @property
    def grid_size(self) -> int:
        return len(self.k) * len(self.n_rounds) * len(self.d_be) * len(self.sigma)

    def grid_points(self) -> list[GridPoint]:
        points = []
        index = 0
        for k in self.k:
            for n in self.n_rounds:
                for d_be in self.d_be:
                    for sigma in self.sigma:
                        points.append(GridPoint(index=index, k=k, n=n, d_be=d_be, sigma=sigma))
                        index += 1
        return points


@dataclass(frozen=True)
class ResultRow:
    k: int
    n: int
    d_be: float
    sigma: float
    rule: str
    metric: str
    trials: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    p_analytic: float | None


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval; robust near 0 and 1, always contains p_hat."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    # pin the degenerate endpoints so the interval always contains p_hat
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def _distances(d_be: float, geometry: str) -> tuple[float, float]:
    if geometry == GEOMETRY_EQUIDISTANT:
        dep = build_equidistant_deployment(d_be)
    else:
        dep = build_canonical_deployment(d_be)
    return dep.d_ae, dep.d_be


def _trial_seed(base_seed: int, grid_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, grid_index, trial_index])


def simulate_session_counts(
    rng: np.random.Generator,
    n: int,
    d_ae: float,
    d_be: float,
    cfg: ScenarioConfig,
    rule: str = RULE_ML,
) -> tuple[int, np.ndarray]:
    """One full session plus eavesdropper, vectorized.

    Returns (generated bit count, per-bit correctness mask). Mirrors the
    per-round engine draw for draw: interleaved Alice/Bob bit draws, then
    per bit-round an Alice and a Bob shadowing draw (then, for the random
    rule, the guess draws).
    """
    bits = rng.integers(0, 2, size=2 * n)
    a = bits[0::2]
    b = bits[1::2]
    values = a[a != b]  # generated key bits, in slot order
    m = values.size
    noise = rng.standard_normal((m, 2))
    pl_ae = cfg.pl0 + 10.0 * cfg.gamma * math.log10(d_ae / cfg.d0)
    pl_be = cfg.pl0 + 10.0 * cfg.gamma * math.log10(d_be / cfg.d0)
    sample_alice = cfg.pt - (pl_ae + cfg.sigma * noise[:, 0])
    sample_bob = cfg.pt - (pl_be + cfg.sigma * noise[:, 1])
    correct = _classify_bit_rounds(rng, values, sample_alice, sample_bob, d_ae, d_be, cfg.gamma, rule)
    return m, correct


def _classify_bit_rounds(
    rng: np.random.Generator,
    values: np.ndarray,
    sample_alice: np.ndarray,
    sample_bob: np.ndarray,
    d_ae: float,
    d_be: float,
    gamma: float,
    rule: str,
) -> np.ndarray:
    """Correctness mask of the adversary's guesses over bit rounds."""
    if rule == RULE_RANDOM:
        return rng.integers(0, 2, size=values.size) == values
    on_f0_is_alice = values == 0
    rss_f0 = np.where(on_f0_is_alice, sample_alice, sample_bob)
    rss_f1 = np.where(on_f0_is_alice, sample_bob, sample_alice)
    delta = 0.0 if d_ae == d_be else delta_mean_pathloss(d_ae, d_be, gamma)
    score = (rss_f0 - rss_f1) * delta
    # score == 0 is an exact likelihood tie: abstain, never correct
    return np.where(score > 0.0, values == 1, np.where(score < 0.0, values == 0, False))


def estimate_rule_correctness(
    rng: np.random.Generator,
    n_bit_rounds: int,
    d_ae: float,
    d_be: float,
    cfg: ScenarioConfig,
    rule: str = RULE_ML,
    chunk: int = 1_000_000,
) -> float:
    """Empirical per-bit-round correct-guess frequency over synthetic bit rounds."""
    pl_ae = cfg.pl0 + 10.0 * cfg.gamma * math.log10(d_ae / cfg.d0)
    pl_be = cfg.pl0 + 10.0 * cfg.gamma * math.log10(d_be / cfg.d0)
    correct = 0
    remaining = n_bit_rounds
    while remaining > 0:
        m = min(chunk, remaining)
        values = rng.integers(0, 2, size=m)
        noise = rng.standard_normal((m, 2))
        sample_alice = cfg.pt - (pl_ae + cfg.sigma * noise[:, 0])
        sample_bob = cfg.pt - (pl_be + cfg.sigma * noise[:, 1])
        mask = _classify_bit_rounds(
            rng, values, sample_alice, sample_bob, d_ae, d_be, cfg.gamma, rule
        )
        correct += int(mask.sum())
        remaining -= m
    return correct / n_bit_rounds


def _trial_success(
    seed: np.random.SeedSequence,
    point: GridPoint,
    d_ae: float,
    d_be: float,
    cfg: ScenarioConfig,
    rule: str,
    metric: str,
) -> bool:
    rng = np.random.default_rng(seed)
    generated, correct = simulate_session_counts(rng, point.n, d_ae, d_be, cfg, rule)
    if metric == METRIC_WHOLE_KEY:
        if generated < point.k:
            return False
        return not bool(correct[: point.k].all())
    secret = generated - int(correct.sum())
    return secret >= point.k


def analytic_rule_pg(delta: float, sigma: float, rule: str) -> float:
    """Per-bit-round correct-guess probability of the simulated rule.

    Differs from the raw closed form only at delta = 0 with sigma > 0,
    where the abstaining rule scores 0 rather than the coin-flip 0.5.
    """
    if rule == RULE_RANDOM:
        return 0.5
    if delta == 0.0:
        return 0.0
    if sigma == 0.0:
        return 1.0
    return pg_closed_form(delta, sigma)


def analytic_prob(point: GridPoint, rule: str, metric: str, geometry: str, gamma: float) -> float:
    """Closed-form success probability at one grid point."""
    d_ae, d_be = _distances(point.d_be, geometry)
    delta = 0.0 if d_ae == d_be else delta_mean_pathloss(d_ae, d_be, gamma)
    pg = analytic_rule_pg(delta, point.sigma, rule)
    if metric == METRIC_WHOLE_KEY:
        return float(key_prob(point.k, point.n, 0.5) * (1.0 - pg**point.k))
    return float(key_prob(point.k, point.n, secret_bit_prob(0.5, pg)))


def run_grid_point(
    point: GridPoint,
    trials: int,
    base_seed: int,
    cfg: ScenarioConfig,
    rule: str = RULE_ML,
    metric: str = METRIC_PER_BIT,
    geometry: str = GEOMETRY_CANONICAL,
) -> tuple[float, tuple[float, float]]:
    """Empirical success fraction and Wilson interval at one grid point."""
    d_ae, d_be = _distances(point.d_be, geometry)
    if min(d_ae, d_be) < cfg.d0:
        raise ValueError(f"adversary distance {min(d_ae, d_be)} m below reference distance {cfg.d0} m")
    trial_cfg = cfg.replace(sigma=point.sigma)
    successes = 0
    for t in range(trials):
        seed = _trial_seed(base_seed, point.index, t)
        successes += _trial_success(seed, point, d_ae, d_be, trial_cfg, rule, metric)
    return successes / trials, wilson_interval(successes, trials)


def sweep(spec: SweepSpec, workers: int = 1) -> ResultTable:
    """One ResultRow per grid point, in deterministic nested-axis order."""
    points = spec.grid_points()

    def one(point: GridPoint) -> ResultRow:
        p_hat, (lo, hi) = run_grid_point(
            point, spec.trials, spec.base_seed, spec.scenario,
            rule=spec.rule, metric=spec.metric, geometry=spec.geometry,
        )
        analytic = analytic_prob(point, spec.rule, spec.metric, spec.geometry, spec.scenario.gamma)
        return ResultRow(
            k=point.k, n=point.n, d_be=point.d_be, sigma=point.sigma,
            rule=spec.rule, metric=spec.metric, trials=spec.trials,
            p_hat=p_hat, ci_lo=lo, ci_hi=hi, p_analytic=analytic,
        )

    if workers <= 1 or len(points) <= 1:
        rows = [one(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, points))
    return ResultTable(rows=tuple(rows))


@dataclass(frozen=True)
class FrontierRow:
    d_be: float
    min_n: int | None  # None marks an infeasible distance


def frontier(
    table: ResultTable, target: float, column: str = "p_hat"
) -> list[FrontierRow]:
    """Per adversary distance, the smallest n whose estimate meets the target.

    Requires a single (k, sigma, rule, metric) slice. Raw minima are cleaned
    isotonically (running minimum over increasing distance) to strip Monte
    Carlo noise; the true frontier is non-increasing in distance.
    """
    if column not in ("p_hat", "p_analytic"):
        raise ValueError(f"unknown frontier column {column!r}")
    if not table.rows:
        return []
    slices = {(r.k, r.sigma, r.rule, r.metric) for r in table.rows}
    if len(slices) != 1:
        raise ValueError(f"frontier needs a single (k, sigma, rule, metric) slice, got {len(slices)}")
    by_dist: dict[float, list[ResultRow]] = {}
    for row in table.rows:
        by_dist.setdefault(row.d_be, []).append(row)
    result = []
    running: int | None = None
    for d_be in sorted(by_dist):
        feasible = [
            r.n for r in by_dist[d_be]
            if getattr(r, column) is not None and getattr(r, column) >= target
        ]
        raw = min(feasible) if feasible else None
        if raw is not None and (running is None or raw < running):
            running = raw
        result.append(FrontierRow(d_be=d_be, min_n=running))
    return result


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_result_csv(table: ResultTable, dest: Union[str, TextIO]) -> None:
    own = isinstance(dest, str)
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in table.rows:
            writer.writerow([_format_value(getattr(r, col)) for col in RESULT_COLUMNS])
    finally:
        if own:
            fh.close()


def result_csv_text(table: ResultTable) -> str:
    buf = io.StringIO()
    write_result_csv(table, buf)
    return buf.getvalue()


def read_result_csv(src: Union[str, TextIO]) -> ResultTable:
    own = isinstance(src, str)
    fh = open(src, "r", newline="", encoding="utf-8") if own else src
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(RESULT_COLUMNS):
            raise ValueError(f"unexpected result CSV header: {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            rows.append(
                ResultRow(
                    k=int(rec[0]), n=int(rec[1]), d_be=float(rec[2]), sigma=float(rec[3]),
                    rule=rec[4], metric=rec[5], trials=int(rec[6]),
                    p_hat=float(rec[7]), ci_lo=float(rec[8]), ci_hi=float(rec[9]),
                    p_analytic=float(rec[10]) if rec[10] != "" else None,
                )
            )
        return ResultTable(rows=tuple(rows))
    finally:
        if own:
            fh.close()


def write_frontier_csv(rows: Sequence[FrontierRow], dest: Union[str, TextIO]) -> None:
    own = isinstance(dest, str)
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["d_be", "min_n", "status"])
        for r in rows:
            if r.min_n is None:
                writer.writerow([_format_value(r.d_be), "", "infeasible"])
            else:
                writer.writerow([_format_value(r.d_be), r.min_n, "ok"])
    finally:
        if own:
            fh.close()


def write_sweep_plot_script(csv_name: str, dest: Union[str, TextIO]) -> None:
    """gnuplot script: success probability vs number of transmissions."""
    text = (
        "set datafile separator ','\n"
        "set key autotitle columnhead outside\n"
        "set xlabel 'transmissions N'\n"
        "set ylabel 'P(key established)'\n"
        "set yrange [0:1.05]\n"
        "set grid\n"
        f"plot '{csv_name}' using 2:8 with points pt 7 title 'empirical', \\\n"
        f"     '{csv_name}' using 2:11 with lines title 'closed form'\n"
    )
    _write_text(text, dest)


def write_frontier_plot_script(csv_name: str, dest: Union[str, TextIO]) -> None:
    """gnuplot script: minimum transmissions vs adversary distance."""
    text = (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'adversary distance d_be (m)'\n"
        "set ylabel 'minimum transmissions N'\n"
        "set grid\n"
        f"plot '{csv_name}' using 1:2 with linespoints pt 5 title 'frontier'\n"
    )
    _write_text(text, dest)


def _write_text(text: str, dest: Union[str, TextIO]) -> None:
    if isinstance(dest, str):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)
