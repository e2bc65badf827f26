"""Round engine: random frequency selection, collision detection, shared bits.

Each slot both nodes draw a secret bit b, transmit on f_b and listen on the
other frequency. Same frequency -> collision, slot discarded. Different
frequencies -> one shared bit, equal to Alice's draw (Bob derives the same
value by flipping his own draw).

A session is single-threaded and deterministic given its generator; sessions
with distinct seeds share no mutable state and may run in parallel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence, TextIO, Union

import numpy as np

from .scenario import ScenarioConfig

F0 = "f0"
F1 = "f1"


class NodeId(IntEnum):
    ALICE = 0
    BOB = 1


def freq_for_bit(bit: int) -> str:
    return F1 if bit else F0


@dataclass(frozen=True)
class RoundAction:
    bit: int
    tx_freq: str
    rx_freq: str

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit}")
        if self.tx_freq != freq_for_bit(self.bit) or self.rx_freq == self.tx_freq:
            raise ValueError("node must transmit on f_bit and listen on the other frequency")

    @classmethod
    def from_bit(cls, bit: int) -> "RoundAction":
        return cls(bit=bit, tx_freq=freq_for_bit(bit), rx_freq=freq_for_bit(1 - bit))


@dataclass(frozen=True)
class Collision:
    """Both nodes picked the same frequency; the slot yields no key bit."""

    freq: str


@dataclass(frozen=True)
class SharedBit:
    """Collision-free slot: one key bit, equal to Alice's draw."""

    value: int
    alice_freq: str
    bob_freq: str

    def __post_init__(self):
        if self.alice_freq == self.bob_freq:
            raise ValueError("shared bit requires the nodes on different frequencies")
        if self.value not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.value}")


@dataclass(frozen=True)
class DetectionMiss:
    """Collision-free slot both nodes failed to detect and therefore discarded.

    Produced only when a nonzero detection-miss probability is configured;
    the default engine uses ideal, symmetric detection.
    """

    alice_freq: str
    bob_freq: str


RoundOutcome = Union[Collision, SharedBit, DetectionMiss]


@dataclass(frozen=True)
class RoundRecord:
    slot: int  # 1-based slot index
    alice: RoundAction
    bob: RoundAction
    outcome: RoundOutcome


@dataclass(frozen=True)
class SessionTranscript:
    rounds: tuple[RoundRecord, ...]
    key_bits: tuple[int, ...]

    def __post_init__(self):
        generated = tuple(
            r.outcome.value for r in self.rounds if isinstance(r.outcome, SharedBit)
        )
        if self.key_bits != generated:
            raise ValueError("key_bits must equal the ordered shared-bit values")

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def key_string(self) -> str:
        return "".join(str(b) for b in self.key_bits)

    def collision_slots(self) -> list[int]:
        return [r.slot for r in self.rounds if isinstance(r.outcome, Collision)]

    def bit_slots(self) -> list[int]:
        return [r.slot for r in self.rounds if isinstance(r.outcome, SharedBit)]

    def alice_key_view(self) -> tuple[int, ...]:
        """Key as Alice reconstructs it: her own bit on each generating slot."""
        return tuple(r.alice.bit for r in self.rounds if isinstance(r.outcome, SharedBit))

    def bob_key_view(self) -> tuple[int, ...]:
        """Key as Bob reconstructs it: his bit flipped on each generating slot."""
        return tuple(r.bob.bit ^ 1 for r in self.rounds if isinstance(r.outcome, SharedBit))


def node_round_action(node: NodeId, rng: np.random.Generator) -> RoundAction:
    """Draw the slot's secret bit (one rng draw) and derive the frequency pair."""
    bit = int(rng.integers(0, 2))
    return RoundAction.from_bit(bit)


def resolve_round(a: RoundAction, b: RoundAction) -> RoundOutcome:
    """Combine Alice's (a) and Bob's (b) actions into the slot outcome."""
    if a.tx_freq == b.tx_freq:
        return Collision(freq=a.tx_freq)
    return SharedBit(value=a.bit, alice_freq=a.tx_freq, bob_freq=b.tx_freq)


def run_session(
    cfg: ScenarioConfig,
    rng: np.random.Generator | None = None,
    *,
    alice_bits: Sequence[int] | None = None,
    bob_bits: Sequence[int] | None = None,
    miss_prob: float = 0.0,
) -> SessionTranscript:
    """Run cfg.n_rounds slots and collect the transcript.

    Draw order is contractual for replay: per slot, Alice's bit then Bob's
    bit. Scripted mode replaces the rng draws with the supplied sequences
    (both must be given, equal length, overriding cfg.n_rounds). With
    miss_prob > 0 one extra uniform draw is consumed per collision-free slot.
    """
    scripted = alice_bits is not None or bob_bits is not None
    if scripted:
        if alice_bits is None or bob_bits is None:
            raise ValueError("scripted sessions need both alice_bits and bob_bits")
        if len(alice_bits) != len(bob_bits):
            raise ValueError("scripted sequences must have equal length")
        n = len(alice_bits)
    else:
        n = cfg.n_rounds
    if not (0.0 <= miss_prob <= 1.0):
        raise ValueError(f"miss_prob must be in [0, 1], got {miss_prob}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    rounds = []
    key_bits = []
    for i in range(n):
        if scripted:
            a = RoundAction.from_bit(int(alice_bits[i]))
            b = RoundAction.from_bit(int(bob_bits[i]))
        else:
            a = node_round_action(NodeId.ALICE, rng)
            b = node_round_action(NodeId.BOB, rng)
        outcome = resolve_round(a, b)
        if isinstance(outcome, SharedBit) and miss_prob > 0.0:
            if rng.uniform() < miss_prob:
                outcome = DetectionMiss(alice_freq=a.tx_freq, bob_freq=b.tx_freq)
        rounds.append(RoundRecord(slot=i + 1, alice=a, bob=b, outcome=outcome))
        if isinstance(outcome, SharedBit):
            key_bits.append(outcome.value)
    return SessionTranscript(rounds=tuple(rounds), key_bits=tuple(key_bits))


def _outcome_fields(outcome: RoundOutcome) -> tuple[str, str]:
    if isinstance(outcome, Collision):
        return "collision", ""
    if isinstance(outcome, DetectionMiss):
        return "miss", ""
    return "bit", str(outcome.value)


def write_transcript_csv(
    transcript: SessionTranscript, dest: Union[str, TextIO], *, seed: int | None = None
) -> None:
    """One row per slot: round, a_bit, b_bit, outcome, bit_value.

    The derived key appears as a '# key=' comment line ahead of the header.
    """
    own = isinstance(dest, str)
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        fh.write(f"# key={transcript.key_string}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "a_bit", "b_bit", "outcome", "bit_value"])
        for r in transcript.rounds:
            kind, value = _outcome_fields(r.outcome)
            writer.writerow([r.slot, r.alice.bit, r.bob.bit, kind, value])
    finally:
        if own:
            fh.close()


def transcript_csv_text(transcript: SessionTranscript, *, seed: int | None = None) -> str:
    buf = io.StringIO()
    write_transcript_csv(transcript, buf, seed=seed)
    return buf.getvalue()
