import io
import math

import numpy as np
import pytest

from fhkex.adversary import (
    KIND_BIT,
    KIND_COLLISION,
    RULE_ML,
    RULE_RANDOM,
    EveKnowledge,
    Guess,
    Observation,
    SecrecyReport,
    classify_ml,
    classify_random,
    eve_reconstructs_key,
    observe_round,
    pg_closed_form,
    score_session,
    simulate_eavesdropper,
    write_adversary_trace_csv,
)
from fhkex.channel import PathLossParams
from fhkex.protocol import Collision, SharedBit, run_session
from fhkex.scenario import (
    Deployment,
    ScenarioConfig,
    build_canonical_deployment,
    build_equidistant_deployment,
)

NO_FADING = ScenarioConfig(sigma=0.0)
CANONICAL_20 = build_canonical_deployment(20.0)  # d_ae = 70, d_be = 20


def _knowledge(deployment, cfg, rule=RULE_ML):
    return EveKnowledge.from_scenario(deployment, cfg, rule=rule)


def test_observation_invariants():
    with pytest.raises(ValueError):
        Observation(slot=1, kind=KIND_BIT, rss_f0=-60.0, rss_f1=None)
    with pytest.raises(ValueError):
        Observation(slot=1, kind=KIND_COLLISION, rss_f0=-60.0)
    with pytest.raises(ValueError):
        Observation(slot=1, kind="weird")


def test_observe_bit_round_without_fading():
    outcome = SharedBit(value=0, alice_freq="f0", bob_freq="f1")
    rng = np.random.default_rng(0)
    obs = observe_round(outcome, CANONICAL_20, NO_FADING, rng, slot=3)
    assert obs.kind == KIND_BIT
    assert obs.rss_f0 == pytest.approx(-84.578431400499, abs=1e-9)  # Alice at 70 m
    assert obs.rss_f1 == pytest.approx(-65.53604984823934, abs=1e-9)  # Bob at 20 m

    flipped = SharedBit(value=1, alice_freq="f1", bob_freq="f0")
    obs = observe_round(flipped, CANONICAL_20, NO_FADING, rng)
    assert obs.rss_f1 == pytest.approx(-84.578431400499, abs=1e-9)
    assert obs.rss_f0 == pytest.approx(-65.53604984823934, abs=1e-9)


def test_observe_equidistant_samples_equal():
    dep = build_equidistant_deployment(60.0)
    outcome = SharedBit(value=0, alice_freq="f0", bob_freq="f1")
    obs = observe_round(outcome, dep, NO_FADING, np.random.default_rng(0))
    assert obs.rss_f0 == obs.rss_f1


def test_observe_collision_round_is_flagged_only():
    obs = observe_round(Collision(freq="f0"), CANONICAL_20, NO_FADING, np.random.default_rng(0), slot=9)
    assert obs.kind == KIND_COLLISION
    assert obs.rss_f0 is None and obs.rss_f1 is None


def test_observe_draw_counts():
    cfg = ScenarioConfig(sigma=8.0)
    outcome = SharedBit(value=0, alice_freq="f0", bob_freq="f1")
    rng = np.random.default_rng(21)
    observe_round(outcome, CANONICAL_20, cfg, rng)
    ref = np.random.default_rng(21)
    ref.standard_normal()
    ref.standard_normal()
    assert rng.standard_normal() == ref.standard_normal()

    rng2 = np.random.default_rng(22)
    observe_round(Collision(freq="f1"), CANONICAL_20, cfg, rng2)
    assert rng2.standard_normal() == np.random.default_rng(22).standard_normal()


def test_ml_always_correct_without_fading():
    knowledge = _knowledge(CANONICAL_20, NO_FADING)
    rng = np.random.default_rng(0)
    for value, af, bf in [(0, "f0", "f1"), (1, "f1", "f0")]:
        outcome = SharedBit(value=value, alice_freq=af, bob_freq=bf)
        obs = observe_round(outcome, CANONICAL_20, NO_FADING, rng)
        assert classify_ml(obs, knowledge).decision == value


def test_ml_abstains_when_equidistant():
    dep = build_equidistant_deployment(60.0)
    knowledge = _knowledge(dep, NO_FADING)
    outcome = SharedBit(value=1, alice_freq="f1", bob_freq="f0")
    obs = observe_round(outcome, dep, NO_FADING, np.random.default_rng(0))
    assert classify_ml(obs, knowledge).decision is None


def test_ml_rejects_collision_observation():
    knowledge = _knowledge(CANONICAL_20, NO_FADING)
    with pytest.raises(ValueError):
        classify_ml(Observation(slot=1, kind=KIND_COLLISION), knowledge)


def test_ml_matches_closed_form_at_sigma8():
    cfg = ScenarioConfig(sigma=8.0)
    dep = CANONICAL_20
    knowledge = _knowledge(dep, cfg)
    rng = np.random.default_rng(1000)
    n = 10**6
    # vectorized mirror of observe_round + classify_ml
    values = rng.integers(0, 2, size=n)
    noise = rng.standard_normal((n, 2))
    pl_ae = 40.0 + 35.0 * math.log10(dep.d_ae)
    pl_be = 40.0 + 35.0 * math.log10(dep.d_be)
    s_alice = 20.0 - (pl_ae + 8.0 * noise[:, 0])
    s_bob = 20.0 - (pl_be + 8.0 * noise[:, 1])
    rss_f0 = np.where(values == 0, s_alice, s_bob)
    rss_f1 = np.where(values == 0, s_bob, s_alice)
    score = (rss_f0 - rss_f1) * knowledge.delta
    correct = np.where(score > 0, values == 1, np.where(score < 0, values == 0, False))
    expected = pg_closed_form(knowledge.delta, 8.0)
    assert expected == pytest.approx(0.95382451734016105, abs=1e-12)
    assert correct.mean() == pytest.approx(expected, abs=0.002)


def test_random_rule_behaviour():
    rng = np.random.default_rng(4)
    n = 10**5
    obs = Observation(slot=1, kind=KIND_BIT, rss_f0=-60.0, rss_f1=-70.0)
    decisions = np.array([classify_random(obs, rng).decision for _ in range(n)])
    assert set(np.unique(decisions)) == {0, 1}  # never abstains
    assert decisions.mean() == pytest.approx(0.5, abs=0.01)
    # ignores the observation values entirely
    rng_a = np.random.default_rng(9)
    rng_b = np.random.default_rng(9)
    other = Observation(slot=1, kind=KIND_BIT, rss_f0=-70.0, rss_f1=-60.0)
    seq_a = [classify_random(obs, rng_a).decision for _ in range(100)]
    seq_b = [classify_random(other, rng_b).decision for _ in range(100)]
    assert seq_a == seq_b
    with pytest.raises(ValueError):
        classify_random(Observation(slot=1, kind=KIND_COLLISION), rng)


def test_pg_closed_form_values():
    assert pg_closed_form(0.0, 8.0) == 0.5
    assert pg_closed_form(19.04238155225965, 8.0) == pytest.approx(0.95382451734016105, abs=1e-12)
    assert pg_closed_form(19.04238155225965, 2.0) >= 0.999999
    assert pg_closed_form(5.0, 0.0) == 1.0
    assert pg_closed_form(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        pg_closed_form(1.0, -1.0)


def test_pg_closed_form_monotonicity():
    deltas = np.linspace(0.0, 60.0, 40)
    values = [pg_closed_form(d, 8.0) for d in deltas]
    assert all(b >= a for a, b in zip(values, values[1:]))
    sigmas = np.linspace(0.5, 20.0, 40)
    values = [pg_closed_form(19.0, s) for s in sigmas]
    assert all(b <= a for a, b in zip(values, values[1:]))


def _session_with_guesses(cfg, dep, rule, seed):
    rng = np.random.default_rng(seed)
    transcript = run_session(cfg, rng)
    observations, guesses = simulate_eavesdropper(transcript, dep, cfg, rng, rule=rule)
    return transcript, observations, guesses


def test_score_session_extremes():
    cfg = NO_FADING.replace(n_rounds=300)
    transcript, _, guesses = _session_with_guesses(cfg, CANONICAL_20, RULE_ML, seed=1)
    report = score_session(transcript, guesses)
    # without fading every unequal-distance guess is right
    assert report.guessed_correct == report.generated
    assert report.secret == 0

    flipped = [Guess(slot=g.slot, decision=None if g.decision is None else g.decision ^ 1) for g in guesses]
    report = score_session(transcript, flipped)
    assert report.secret == report.generated


def test_score_session_random_rule_quarter():
    cfg = ScenarioConfig(sigma=8.0, n_rounds=10**5)
    transcript, _, guesses = _session_with_guesses(cfg, CANONICAL_20, RULE_RANDOM, seed=12)
    report = score_session(transcript, guesses)
    assert report.secret / report.n_rounds == pytest.approx(0.25, abs=0.007)


def test_score_session_coverage_mismatch_rejected():
    cfg = NO_FADING.replace(n_rounds=50)
    transcript, _, guesses = _session_with_guesses(cfg, CANONICAL_20, RULE_ML, seed=2)
    with pytest.raises(ValueError):
        score_session(transcript, guesses[:-1])
    shifted = [Guess(slot=g.slot + 1, decision=g.decision) for g in guesses]
    with pytest.raises(ValueError):
        score_session(transcript, shifted)


def test_secrecy_report_invariants():
    with pytest.raises(ValueError):
        SecrecyReport(n_rounds=10, generated=5, guessed_correct=2, secret=4)
    with pytest.raises(ValueError):
        SecrecyReport(n_rounds=4, generated=5, guessed_correct=0, secret=5)


def test_decisions_invariant_under_power_and_reference_shift():
    base = ScenarioConfig(sigma=8.0, n_rounds=2000)
    shifted = base.replace(pt=base.pt + 17.25, pl0=base.pl0 + 6.5)
    t1, _, g1 = _session_with_guesses(base, CANONICAL_20, RULE_ML, seed=55)
    t2, _, g2 = _session_with_guesses(shifted, CANONICAL_20, RULE_ML, seed=55)
    assert t1 == t2
    assert g1 == g2
    assert score_session(t1, g1) == score_session(t2, g2)


def test_swapped_positions_flip_decisions():
    cfg = ScenarioConfig(sigma=8.0)
    knowledge = _knowledge(CANONICAL_20, cfg)
    swapped = EveKnowledge(
        d_ae=knowledge.d_be, d_be=knowledge.d_ae, params=knowledge.params, sigma=knowledge.sigma
    )
    rng = np.random.default_rng(77)
    for _ in range(200):
        value = int(rng.integers(0, 2))
        outcome = SharedBit(
            value=value,
            alice_freq="f0" if value == 0 else "f1",
            bob_freq="f1" if value == 0 else "f0",
        )
        obs = observe_round(outcome, CANONICAL_20, cfg, rng)
        original = classify_ml(obs, knowledge).decision
        mirrored = classify_ml(obs, swapped).decision
        if original is None:
            assert mirrored is None
        else:
            assert mirrored == original ^ 1


def test_swapped_positions_preserve_correctness_rate():
    cfg = ScenarioConfig(sigma=8.0, n_rounds=4 * 10**4)
    dep = CANONICAL_20
    mirrored = Deployment(alice=dep.bob, bob=dep.alice, eve=dep.eve)
    t1, _, g1 = _session_with_guesses(cfg, dep, RULE_ML, seed=5)
    t2, _, g2 = _session_with_guesses(cfg, mirrored, RULE_ML, seed=5)
    r1 = score_session(t1, g1)
    r2 = score_session(t2, g2)
    rate1 = r1.guessed_correct / r1.generated
    rate2 = r2.guessed_correct / r2.generated
    assert rate1 == pytest.approx(rate2, abs=0.01)


def test_eve_reconstructs_key():
    cfg = NO_FADING.replace(n_rounds=100)
    transcript, _, guesses = _session_with_guesses(cfg, CANONICAL_20, RULE_ML, seed=8)
    assert eve_reconstructs_key(transcript, guesses, k=10)
    assert not eve_reconstructs_key(transcript, guesses, k=len(transcript.key_bits) + 1)
    wrong = [Guess(slot=g.slot, decision=g.decision ^ 1) for g in guesses]
    assert not eve_reconstructs_key(transcript, wrong, k=10)


def test_adversary_trace_csv():
    cfg = ScenarioConfig(sigma=8.0, n_rounds=20)
    transcript, observations, guesses = _session_with_guesses(cfg, CANONICAL_20, RULE_ML, seed=3)
    buf = io.StringIO()
    write_adversary_trace_csv(transcript, observations, guesses, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "round,rss_f0,rss_f1,decision,correct"
    assert len(lines) == 1 + transcript.n_rounds
    collision_rows = [l for l in lines[1:] if l.endswith(",,,")]
    assert len(collision_rows) == len(transcript.collision_slots())
