"""Physical playground: node positions, distances, and simulation parameters."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid scenario input; ``code`` names the violated constraint."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Position:
    x: float  # meters
    y: float  # meters

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ConfigError(
                "invalid-position",
                f"coordinates must be finite, got ({self.x}, {self.y})",
            )


def distance(a: Position, b: Position) -> float:
    """Euclidean distance between two positions, in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class Deployment:
    """Positions of the two legitimate nodes and the eavesdropper."""

    alice: Position
    bob: Position
    eve: Position

    def __post_init__(self):
        for label, d in (
            ("alice/bob", self.d_ab),
            ("alice/eve", self.d_ae),
            ("bob/eve", self.d_be),
        ):
            if d <= 0.0:
                raise ConfigError("colocated-nodes", f"{label} are co-located")

    @property
    def d_ab(self) -> float:
        return distance(self.alice, self.bob)

    @property
    def d_ae(self) -> float:
        return distance(self.alice, self.eve)

    @property
    def d_be(self) -> float:
        return distance(self.bob, self.eve)


#: Half the default separation of the two legitimate nodes (they sit 50 m apart).
NODE_HALF_SPACING = 25.0


def build_canonical_deployment(d_be: float) -> Deployment:
    """Collinear deployment: Alice [-25,0], Bob [25,0], Eve [25+d_be, 0].

    Guarantees d_AB = 50 m and d_AE = d_BE + 50 m.
    """
    if not (d_be > 0.0) or not math.isfinite(d_be):
        raise ConfigError("invalid-dbe", f"d_be must be positive, got {d_be}")
    return Deployment(
        alice=Position(-NODE_HALF_SPACING, 0.0),
        bob=Position(NODE_HALF_SPACING, 0.0),
        eve=Position(NODE_HALF_SPACING + d_be, 0.0),
    )


def build_equidistant_deployment(d: float) -> Deployment:
    """Eve on the perpendicular bisector, at distance d from both nodes.

    Requires d >= 25 m (half the node spacing); below that no planar
    position is equidistant at distance d.
    """
    if not math.isfinite(d) or d < NODE_HALF_SPACING:
        raise ConfigError(
            "invalid-dbe",
            f"equidistant placement needs d >= {NODE_HALF_SPACING}, got {d}",
        )
    h = math.sqrt(d * d - NODE_HALF_SPACING * NODE_HALF_SPACING)
    return Deployment(
        alice=Position(-NODE_HALF_SPACING, 0.0),
        bob=Position(NODE_HALF_SPACING, 0.0),
        eve=Position(0.0, h),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Channel and protocol parameters for one simulated session.

    slot_duration is metadata only (wall-clock estimates in reports); the
    simulator is slot-synchronous and never waits.
    """

    gamma: float = 3.5  # path loss exponent
    sigma: float = 8.0  # shadowing std-dev, dB
    pl0: float = 40.0  # path loss at reference distance, dB
    d0: float = 1.0  # reference distance, meters
    pt: float = 20.0  # transmit power, dBm
    slot_duration: float = 1e-3  # seconds per slot
    n_rounds: int = 600
    seed: int = 0

    def replace(self, **kwargs) -> "ScenarioConfig":
        return dataclasses.replace(self, **kwargs)


CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(ScenarioConfig))

_INT_FIELDS = ("n_rounds", "seed")


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return cfg unchanged iff every field invariant holds, else raise ConfigError."""
    if not (math.isfinite(cfg.gamma) and cfg.gamma > 0.0):
        raise ConfigError("invalid-gamma", f"gamma must be > 0, got {cfg.gamma}")
    if not (math.isfinite(cfg.sigma) and cfg.sigma >= 0.0):
        raise ConfigError("invalid-sigma", f"sigma must be >= 0, got {cfg.sigma}")
    if not math.isfinite(cfg.pl0):
        raise ConfigError("invalid-pl0", f"pl0 must be finite, got {cfg.pl0}")
    if not (math.isfinite(cfg.d0) and cfg.d0 > 0.0):
        raise ConfigError("invalid-d0", f"d0 must be > 0, got {cfg.d0}")
    if not math.isfinite(cfg.pt):
        raise ConfigError("invalid-pt", f"pt must be finite, got {cfg.pt}")
    if not (math.isfinite(cfg.slot_duration) and cfg.slot_duration > 0.0):
        raise ConfigError(
            "invalid-slot-duration",
            f"slot_duration must be > 0, got {cfg.slot_duration}",
        )
    if not isinstance(cfg.n_rounds, int) or cfg.n_rounds < 1:
        raise ConfigError("invalid-rounds", f"n_rounds must be >= 1, got {cfg.n_rounds}")
    if not isinstance(cfg.seed, int) or not (0 <= cfg.seed < 2**64):
        raise ConfigError("invalid-seed", f"seed must be a 64-bit unsigned int, got {cfg.seed}")
    return cfg


def load_config(path: str) -> ScenarioConfig:
    """Load a ScenarioConfig from a flat JSON file.

    The schema is one JSON object whose keys are exactly the ScenarioConfig
    field names; missing keys take the defaults, unknown keys are rejected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("invalid-config-file", f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("invalid-config-file", f"{path}: top level must be an object")
    unknown = sorted(set(raw) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError("unknown-config-key", f"{path}: unknown keys {unknown}")
    coerced = {}
    for key, value in raw.items():
        if key in _INT_FIELDS:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"invalid-{key.replace('_', '-')}", f"{key} must be an integer")
            coerced[key] = value
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"invalid-{key.replace('_', '-')}", f"{key} must be a number")
            coerced[key] = float(value)
    return validate_config(ScenarioConfig(**coerced))
