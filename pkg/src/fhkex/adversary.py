"""Eavesdropper model: RSS observation, source classification, secrecy scoring.

Eve monitors both frequencies. On a collision-free slot she records one RSS
sample per frequency (fresh independent shadowing per sample) and tries to
decide which node transmitted where; mapping the inferred assignment through
the public protocol rule yields her guess of the key bit. Collision slots are
detectable (a single occupied frequency) and carry no key material.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO, Union

import numpy as np
from scipy.special import ndtr

from .channel import PathLossParams, ShadowingParams, delta_mean_pathloss, params_from_config, rss
from .protocol import Collision, RoundOutcome, SessionTranscript, SharedBit
from .scenario import Deployment, ScenarioConfig

KIND_BIT = "bit-round"
KIND_COLLISION = "collision-round"

RULE_ML = "ml-pairwise"
RULE_RANDOM = "random-guess"
RULES = (RULE_ML, RULE_RANDOM)


@dataclass(frozen=True)
class Observation:
    slot: int
    kind: str  # KIND_BIT or KIND_COLLISION
    rss_f0: float | None = None  # dBm
    rss_f1: float | None = None  # dBm

    def __post_init__(self):
        if self.kind == KIND_BIT:
            if self.rss_f0 is None or self.rss_f1 is None:
                raise ValueError("bit-round observations need one sample per frequency")
        elif self.kind == KIND_COLLISION:
            if self.rss_f0 is not None or self.rss_f1 is not None:
                raise ValueError("collision-round observations carry no classifier input")
        else:
            raise ValueError(f"unknown observation kind {self.kind!r}")


@dataclass(frozen=True)
class EveKnowledge:
    """What the location- and protocol-aware adversary knows."""

    d_ae: float  # meters
    d_be: float  # meters
    params: PathLossParams
    sigma: float  # dB
    rule: str = RULE_ML
    tie_policy: str = "abstain"

    def __post_init__(self):
        if not (self.d_ae > 0.0 and self.d_be > 0.0):
            raise ValueError("adversary distances must be positive")
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.tie_policy != "abstain":
            raise ValueError("only the abstain tie policy is supported")

    @property
    def delta(self) -> float:
        """Expected dB gap between the Alice and Bob samples."""
        if self.d_ae == self.d_be:
            return 0.0
        return delta_mean_pathloss(self.d_ae, self.d_be, self.params.gamma)

    @classmethod
    def from_scenario(
        cls, deployment: Deployment, cfg: ScenarioConfig, rule: str = RULE_ML
    ) -> "EveKnowledge":
        plp, shp = params_from_config(cfg)
        return cls(
            d_ae=deployment.d_ae, d_be=deployment.d_be, params=plp, sigma=shp.sigma, rule=rule
        )


@dataclass(frozen=True)
class Guess:
    slot: int
    decision: int | None  # 0, 1, or None for abstain


@dataclass(frozen=True)
class SecrecyReport:
    """Per-session secrecy accounting: a bit is secret iff Eve did not call it."""

    n_rounds: int
    generated: int
    guessed_correct: int
    secret: int

    def __post_init__(self):
        if self.secret != self.generated - self.guessed_correct:
            raise ValueError("secret must equal generated - guessed_correct")
        if not (0 <= self.secret <= self.generated <= self.n_rounds):
            raise ValueError("counts must satisfy secret <= generated <= n_rounds")


def observe_round(
    outcome: RoundOutcome,
    deployment: Deployment,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    slot: int = 0,
) -> Observation:
    """Eve's view of one resolved slot.

    Collision-free slots consume two shadowing draws, Alice's sample first;
    collision slots consume none and are only flagged.
    """
    if isinstance(outcome, Collision):
        return Observation(slot=slot, kind=KIND_COLLISION)
    plp, shp = params_from_config(cfg)
    sample_alice = rss(cfg.pt, deployment.d_ae, plp, shp, rng, frequency=outcome.alice_freq)
    sample_bob = rss(cfg.pt, deployment.d_be, plp, shp, rng, frequency=outcome.bob_freq)
    if sample_alice.frequency == "f0":
        return Observation(slot=slot, kind=KIND_BIT, rss_f0=sample_alice.value, rss_f1=sample_bob.value)
    return Observation(slot=slot, kind=KIND_BIT, rss_f0=sample_bob.value, rss_f1=sample_alice.value)


def classify_ml(obs: Observation, knowledge: EveKnowledge) -> Guess:
    """Maximum-likelihood pairwise source assignment on the two samples.

    With equal-variance Gaussian shadowing the likelihood ratio reduces to
    the sign of (rss_f0 - rss_f1) * delta; an exact tie abstains.
    """
    if obs.kind != KIND_BIT:
        raise ValueError("classifier needs a bit-round observation")
    gap = obs.rss_f0 - obs.rss_f1
    score = gap * knowledge.delta
    if score > 0.0:
        decision = 1  # Alice-on-f1 assignment more likely
    elif score < 0.0:
        decision = 0
    else:
        decision = None
    return Guess(slot=obs.slot, decision=decision)


def classify_random(obs: Observation, rng: np.random.Generator) -> Guess:
    """Uniform coin flip; one rng draw, never abstains."""
    if obs.kind != KIND_BIT:
        raise ValueError("classifier needs a bit-round observation")
    return Guess(slot=obs.slot, decision=int(rng.integers(0, 2)))


def pg_closed_form(delta: float, sigma: float) -> float:
    """Probability that the pairwise ML rule names the transmitter correctly.

    Phi(|delta| / (sigma*sqrt(2))) for sigma > 0. At sigma = 0 the rule is
    certain unless the hypotheses coincide (delta = 0), where the abstain
    policy scores 0. For delta = 0 with sigma > 0 the returned 0.5 is the
    coin-flip tie-break value; the simulated rule abstains there instead.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return 1.0 if delta != 0.0 else 0.0
    return float(ndtr(abs(delta) / (sigma * math.sqrt(2.0))))


def score_session(transcript: SessionTranscript, guesses: Sequence[Guess]) -> SecrecyReport:
    """Count secret bits: generated bits minus Eve's correct calls.

    Guesses must cover exactly the bit-generating slots, in order; an
    abstention is never correct.
    """
    bit_records = [r for r in transcript.rounds if isinstance(r.outcome, SharedBit)]
    if [g.slot for g in guesses] != [r.slot for r in bit_records]:
        raise ValueError("guesses must cover exactly the bit-generating slots, in order")
    correct = sum(
        1 for g, r in zip(guesses, bit_records) if g.decision == r.outcome.value
    )
    generated = len(bit_records)
    return SecrecyReport(
        n_rounds=transcript.n_rounds,
        generated=generated,
        guessed_correct=correct,
        secret=generated - correct,
    )


def eve_reconstructs_key(
    transcript: SessionTranscript, guesses: Sequence[Guess], k: int
) -> bool:
    """Whole-key advantage: did Eve call the first k generated bits exactly?"""
    bit_records = [r for r in transcript.rounds if isinstance(r.outcome, SharedBit)]
    if len(bit_records) < k:
        return False
    return all(
        g.decision == r.outcome.value for g, r in zip(guesses[:k], bit_records[:k])
    )


def simulate_eavesdropper(
    transcript: SessionTranscript,
    deployment: Deployment,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    rule: str = RULE_ML,
) -> tuple[list[Observation], list[Guess]]:
    """Observe every slot and classify the bit-generating ones.

    Per slot the draw order is: two observation draws, then (random rule
    only) one guess draw.
    """
    knowledge = EveKnowledge.from_scenario(deployment, cfg, rule=rule)
    observations = []
    guesses = []
    for record in transcript.rounds:
        obs = observe_round(record.outcome, deployment, cfg, rng, slot=record.slot)
        observations.append(obs)
        if obs.kind != KIND_BIT or not isinstance(record.outcome, SharedBit):
            continue
        if rule == RULE_RANDOM:
            guesses.append(classify_random(obs, rng))
        else:
            guesses.append(classify_ml(obs, knowledge))
    return observations, guesses


def write_adversary_trace_csv(
    transcript: SessionTranscript,
    observations: Sequence[Observation],
    guesses: Sequence[Guess],
    dest: Union[str, TextIO],
) -> None:
    """Per-slot trace: round, rss_f0, rss_f1, decision, correct.

    Collision slots leave the sample and decision fields empty.
    """
    by_slot = {g.slot: g for g in guesses}
    truth = {
        r.slot: r.outcome.value
        for r in transcript.rounds
        if isinstance(r.outcome, SharedBit)
    }
    own = isinstance(dest, str)
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["round", "rss_f0", "rss_f1", "decision", "correct"])
        for obs in observations:
            if obs.kind != KIND_BIT:
                writer.writerow([obs.slot, "", "", "", ""])
                continue
            guess = by_slot.get(obs.slot)
            decision = "" if guess is None else ("abstain" if guess.decision is None else guess.decision)
            correct = ""
            if guess is not None and obs.slot in truth:
                correct = int(guess.decision == truth[obs.slot])
            writer.writerow([obs.slot, repr(obs.rss_f0), repr(obs.rss_f1), decision, correct])
    finally:
        if own:
            fh.close()
