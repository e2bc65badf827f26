"""Command-line front end: config loading, subcommand dispatch, output writing."""

from __future__ import annotations

import argparse
import dataclasses
import os
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import adversary, analysis, channel, experiments, protocol, scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

OUTPUT_DIR_ENV = "FHKEX_OUTPUT_DIR"

# demo sequences for the six-slot toy run
FIXTURE_ALICE = (0, 0, 1, 0, 0, 1)
FIXTURE_BOB = (0, 1, 0, 1, 0, 1)

SUBCOMMANDS = ("session", "analyze", "sweep", "frontier", "fixture")

_SCENARIO_FLAGS = {
    "gamma": float,
    "sigma": float,
    "pl0": float,
    "d0": float,
    "pt": float,
    "slot_duration": float,
    "n_rounds": int,
    "seed": int,
}


@dataclass(frozen=True)
class Invocation:
    """One parsed command: subcommand, config source, flag overrides, outputs."""

    subcommand: str
    config_path: str | None = None
    overrides: dict[str, Any] = dataclasses.field(default_factory=dict)
    output_dir: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise scenario.ConfigError(
                "unknown-subcommand", f"subcommand must be one of {SUBCOMMANDS}"
            )

    def get(self, name: str, default=None):
        return self.overrides.get(name, default)


def _fail(code: str, message: str) -> None:
    print(f"error: {code}: {message}", file=sys.stderr)


def _parse_axis(text: str, cast):
    """Axis syntax: comma list '60,80,100' or inclusive range 'start:stop:step'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise scenario.ConfigError("invalid-axis", f"range must be start:stop:step, got {text!r}")
        start, stop, step = (cast(p) for p in parts)
        if step <= 0 or stop < start:
            raise scenario.ConfigError("invalid-axis", f"bad range {text!r}")
        values = []
        v = start
        while v <= stop:
            values.append(cast(v))
            v += step
        return tuple(values)
    if not text:
        return ()
    return tuple(cast(p) for p in text.split(","))


def _build_scenario(inv: Invocation) -> scenario.ScenarioConfig:
    cfg = scenario.load_config(inv.config_path) if inv.config_path else scenario.ScenarioConfig()
    overrides = {}
    for name, cast in _SCENARIO_FLAGS.items():
        value = inv.seed if name == "seed" else inv.get(name)
        if value is not None:
            overrides[name] = cast(value)
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return scenario.validate_config(cfg)


def _output_dir(inv: Invocation) -> Path:
    return Path(inv.output_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")


def _resolve_seed(inv: Invocation, cfg: scenario.ScenarioConfig) -> int:
    """--seed flag wins, then a config-file value; otherwise auto-generate and echo."""
    if inv.seed is not None:
        return int(inv.seed)
    if inv.config_path is not None:
        return cfg.seed
    seed = secrets.randbits(63)
    print(f"seed={seed} (auto-generated; pass --seed to reproduce)")
    return seed


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring the scenario fields")
    p.add_argument("--gamma", type=float, help="path loss exponent")
    p.add_argument("--sigma", type=float, help="shadowing std-dev, dB")
    p.add_argument("--pl0", type=float, help="reference path loss, dB")
    p.add_argument("--d0", type=float, help="reference distance, m")
    p.add_argument("--pt", type=float, help="transmit power, dBm")
    p.add_argument("--slot-duration", dest="slot_duration", type=float, help="slot length, s")
    p.add_argument("--n-rounds", dest="n_rounds", type=int, help="protocol slots per session")
    p.add_argument("--seed", type=int, help="64-bit RNG seed")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or '.')")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhkex",
        description="Simulation lab for key establishment via frequency-hopping collisions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fixture = sub.add_parser("fixture", help="run the scripted six-slot toy example")
    _add_scenario_flags(p_fixture)

    p_session = sub.add_parser("session", help="run one seeded protocol session")
    _add_scenario_flags(p_session)
    p_session.add_argument("--d-be", dest="d_be", type=float, default=20.0,
                           help="adversary distance behind Bob, m")
    p_session.add_argument("--eve", action="store_true",
                           help="also simulate the eavesdropper and write her trace")
    p_session.add_argument("--rule", choices=adversary.RULES, default=adversary.RULE_ML)

    p_analyze = sub.add_parser("analyze", help="closed-form secrecy table")
    _add_scenario_flags(p_analyze)
    p_analyze.add_argument("--k", type=int, default=128, help="key size, bits")
    p_analyze.add_argument("--target", type=float, default=0.99)
    p_analyze.add_argument("--pb", type=float,
                           help="per-slot secret-bit probability (overrides the channel-derived value)")
    p_analyze.add_argument("--d-be", dest="d_be", type=float, default=20.0)
    p_analyze.add_argument("--n", type=int, help="evaluate the key probability at this many slots")

    for name in ("sweep", "frontier"):
        p = sub.add_parser(name, help=f"Monte Carlo {name} over a parameter grid")
        _add_scenario_flags(p)
        p.add_argument("--k-list", dest="k_list", default="128",
                       help="key sizes, comma list or start:stop:step")
        p.add_argument("--n-list", dest="n_list", default="60:600:10", help="transmission counts")
        p.add_argument("--d-be-list", dest="d_be_list", default="20", help="adversary distances, m")
        p.add_argument("--sigma-list", dest="sigma_list", default="8", help="shadowing std-devs, dB")
        p.add_argument("--trials", type=int, default=2000)
        p.add_argument("--rule", choices=adversary.RULES, default=adversary.RULE_ML)
        p.add_argument("--metric", choices=experiments.METRICS, default=experiments.METRIC_PER_BIT)
        p.add_argument("--geometry", choices=experiments.GEOMETRIES,
                       default=experiments.GEOMETRY_CANONICAL)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--budget", type=int, default=50_000_000)
        if name == "frontier":
            p.add_argument("--target", type=float, default=0.99)
            p.add_argument("--column", choices=("p_hat", "p_analytic"), default="p_hat")
            p.add_argument("--from-csv", dest="from_csv",
                           help="reuse an existing sweep CSV instead of simulating")
    return parser


def invocation_from_args(args: argparse.Namespace) -> Invocation:
    options = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config", "out", "seed") and value is not None
    }
    return Invocation(
        subcommand=args.command,
        config_path=args.config,
        overrides=options,
        output_dir=args.out,
        seed=args.seed,
    )


def _cmd_fixture(inv: Invocation) -> int:
    transcript = protocol.run_session(
        scenario.ScenarioConfig(), alice_bits=FIXTURE_ALICE, bob_bits=FIXTURE_BOB
    )
    print(protocol.transcript_csv_text(transcript), end="")
    collisions = ",".join(str(s) for s in transcript.collision_slots())
    print(f"collisions at slots: {collisions}")
    print(f"key: {transcript.key_string}")
    return EXIT_OK


def _cmd_session(inv: Invocation) -> int:
    cfg = _build_scenario(inv)
    cfg = dataclasses.replace(cfg, seed=_resolve_seed(inv, cfg))
    deployment = scenario.build_canonical_deployment(inv.get("d_be", 20.0))
    out = _output_dir(inv)
    rng = np.random.default_rng(cfg.seed)
    transcript = protocol.run_session(cfg, rng)
    path = out / "transcript.csv"
    protocol.write_transcript_csv(transcript, str(path), seed=cfg.seed)
    print(f"wrote {path}")
    print(f"generated {len(transcript.key_bits)} bits over {cfg.n_rounds} slots "
          f"(~{cfg.n_rounds * cfg.slot_duration:.3f} s of air time)")
    print(f"key: {transcript.key_string}")
    if inv.get("eve"):
        rule = inv.get("rule", adversary.RULE_ML)
        observations, guesses = adversary.simulate_eavesdropper(
            transcript, deployment, cfg, rng, rule=rule
        )
        report = adversary.score_session(transcript, guesses)
        trace = out / "eve_trace.csv"
        adversary.write_adversary_trace_csv(transcript, observations, guesses, str(trace))
        print(f"wrote {trace}")
        print(f"adversary ({rule}): guessed {report.guessed_correct} of "
              f"{report.generated} bits; {report.secret} secret")
    return EXIT_OK


def _cmd_analyze(inv: Invocation) -> int:
    cfg = _build_scenario(inv)
    req = analysis.KeyRequest(k=inv.get("k", 128), target=inv.get("target", 0.99))
    d_be = inv.get("d_be", 20.0)
    if inv.get("pb") is not None:
        pb = analysis.Probability(inv.get("pb"))
        print(f"p_b = {float(pb):.6g} (given)")
    else:
        pb = analysis.fading_pb(d_be, cfg.sigma, cfg.gamma)
        d_ab = 2 * scenario.NODE_HALF_SPACING
        delta = channel.delta_mean_pathloss(d_be + d_ab, d_be, cfg.gamma)
        pg = adversary.pg_closed_form(delta, cfg.sigma)
        print(f"d_be = {d_be} m, sigma = {cfg.sigma} dB, gamma = {cfg.gamma}")
        print(f"delta = {delta:.4f} dB, p_g = {pg:.6g}, p_b = {float(pb):.6g}")
    min_n = analysis.min_transmissions(req, pb)
    print(f"minimum transmissions for k={req.k} at target {req.target}: {min_n}")
    n = inv.get("n")
    if n is not None:
        p = analysis.key_prob(req.k, n, pb)
        print(f"P(L >= {req.k} | N={n}) = {float(p):.6g}")
        if inv.get("pb") is None and cfg.sigma > 0:
            region = analysis.privacy_radius(req, n, cfg.sigma, cfg.gamma)
            print(f"privacy radius at N={n}: {region.radius:.3f} m "
                  f"around ({region.center.x}, {region.center.y})")
    return EXIT_OK


def _make_spec(inv: Invocation, seed: int) -> experiments.SweepSpec:
    cfg = _build_scenario(inv)
    spec = experiments.SweepSpec(
        k=_parse_axis(inv.get("k_list", "128"), int),
        n_rounds=_parse_axis(inv.get("n_list", "60:600:10"), int),
        d_be=_parse_axis(inv.get("d_be_list", "20"), float),
        sigma=_parse_axis(inv.get("sigma_list", "8"), float),
        trials=inv.get("trials", 2000),
        base_seed=seed,
        rule=inv.get("rule", adversary.RULE_ML),
        metric=inv.get("metric", experiments.METRIC_PER_BIT),
        geometry=inv.get("geometry", experiments.GEOMETRY_CANONICAL),
        budget=inv.get("budget", 50_000_000),
        scenario=cfg,
    )
    if spec.grid_size == 0:
        raise scenario.ConfigError("empty-grid", "every sweep axis needs at least one value")
    return spec


def _cmd_sweep(inv: Invocation) -> int:
    spec = _make_spec(inv, _resolve_seed(inv, _build_scenario(inv)))
    table = experiments.sweep(spec, workers=inv.get("workers", 1))
    out = _output_dir(inv)
    csv_path = out / "sweep.csv"
    experiments.write_result_csv(table, str(csv_path))
    experiments.write_sweep_plot_script("sweep.csv", str(out / "sweep.gp"))
    print(f"wrote {csv_path} ({len(table.rows)} grid points, {spec.trials} trials each)")
    return EXIT_OK


def _cmd_frontier(inv: Invocation) -> int:
    out = _output_dir(inv)
    if inv.get("from_csv"):
        table = experiments.read_result_csv(inv.get("from_csv"))
    else:
        spec = _make_spec(inv, _resolve_seed(inv, _build_scenario(inv)))
        table = experiments.sweep(spec, workers=inv.get("workers", 1))
        csv_path = out / "sweep.csv"
        experiments.write_result_csv(table, str(csv_path))
        print(f"wrote {csv_path}")
    target = inv.get("target", 0.99)
    column = inv.get("column", "p_hat")
    rows = experiments.frontier(table, target=target, column=column)
    frontier_path = out / "frontier.csv"
    experiments.write_frontier_csv(rows, str(frontier_path))
    experiments.write_frontier_plot_script("frontier.csv", str(out / "frontier.gp"))
    print(f"wrote {frontier_path} ({len(rows)} distances, target {target}, {column})")
    return EXIT_OK


_COMMANDS = {
    "fixture": _cmd_fixture,
    "session": _cmd_session,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "frontier": _cmd_frontier,
}


def dispatch(inv: Invocation) -> int:
    """Route one invocation; every error path maps to a documented exit code."""
    try:
        return _COMMANDS[inv.subcommand](inv)
    except scenario.ConfigError as exc:
        _fail(exc.code, str(exc))
        return EXIT_CONFIG
    except ValueError as exc:
        _fail("invalid-value", str(exc))
        return EXIT_CONFIG
    except analysis.InfeasibleError as exc:
        _fail("infeasible", str(exc))
        return EXIT_INFEASIBLE
    except OSError as exc:
        _fail("io-error", str(exc))
        return EXIT_IO


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        inv = invocation_from_args(args)
    except scenario.ConfigError as exc:
        _fail(exc.code, str(exc))
        return EXIT_CONFIG
    return dispatch(inv)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
