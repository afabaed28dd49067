"""Seeded synthetic sway datasets with a deterministic oracle rater.

The clinical recordings behind the reference results are not available,
so this module fabricates datasets with the same shape and a knowable
ground truth: each set draws a latent difficulty in 1..5, each trial's
pitch and roll are independent first-order autoregressive processes
whose stationary spread grows with difficulty, and harder sets are more
likely to end in step-outs. The oracle rater then scores the set from
the data actually generated (mean sway RMS against fixed thresholds,
with enough step-outs forcing the top rating), so with label_noise = 0
the labels are an exact function of two entries of the feature vector
and the pipeline has something genuinely learnable to find.

Randomness comes from numpy's PCG64 streams keyed by
SeedSequence(seed, spawn_key=(participant, session, set)), a portable,
documented scheme that makes parallel and serial generation, and any
regeneration with the same config, bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import (
    Dataset,
    ExerciseDescriptor,
    ExerciseSet,
    HeadMotion,
    Stance,
    Surface,
    SwayTrial,
    Vision,
)
from .kinematics import trial_metrics

# Stationary roll spread relative to pitch; lateral sway runs smaller.
ROLL_SCALE = 0.8

# Probability that a participant's self-rating moves one level off the
# oracle rating (clamped to the scale ends).
SELF_DISAGREE_PROB = 0.3

# Step-out probability per trial by latent difficulty; increasing, with
# a pronounced jump at the top level.
STEP_OUT_PROB = {1: 0.002, 2: 0.005, 3: 0.01, 4: 0.02, 5: 0.25}

# Difficulty d targets a mean sway RMS near 1.2806 * scale * d (the
# pitch/roll combination of the two AR spreads); these thresholds sit at
# the midpoints between neighbouring targets for the default scale 0.5.
DEFAULT_RMS_THRESHOLDS = (0.96, 1.60, 2.24, 2.88)

_STANCES = (Stance.FEET_APART, Stance.FEET_TOGETHER, Stance.SEMI_TANDEM,
            Stance.TANDEM, Stance.SINGLE_LEG)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_participants: int = 16
    sessions_per_participant: int = 18
    sets_per_session: int = 2
    trials_per_set: int = 6
    sample_rate_hz: float = 50.0
    trial_duration_s: float = 30.0
    difficulty_sway_scale: float = 0.5
    ar_coefficient: float = 0.97
    participant_skill_sd: float = 0.05
    label_noise: float = 0.0

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must fit in 64 bits")
        for name in ("n_participants", "sessions_per_participant",
                     "sets_per_session", "trials_per_set"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.trials_per_set > 6:
            raise ValueError("trials_per_set cannot exceed 6")
        if self.sample_rate_hz <= 0 or self.trial_duration_s <= 0:
            raise ValueError("rate and duration must be positive")
        if self.difficulty_sway_scale <= 0:
            raise ValueError("difficulty_sway_scale must be positive")
        if not (0.0 < self.ar_coefficient < 1.0):
            raise ValueError("ar_coefficient must lie in (0, 1)")
        if self.participant_skill_sd < 0:
            raise ValueError("participant_skill_sd must be non-negative")
        if not (0.0 <= self.label_noise <= 1.0):
            raise ValueError("label_noise must lie in [0, 1]")


@dataclass(frozen=True)
class OracleRater:
    """Deterministic stand-in for the human rater.

    rms_thresholds partition mean sway RMS into the five levels;
    step_out_rule is the step-out count at which a set is rated 5
    outright.
    """

    rms_thresholds: tuple[float, float, float, float] = DEFAULT_RMS_THRESHOLDS
    step_out_rule: int = 3

    def __post_init__(self):
        t = tuple(float(x) for x in self.rms_thresholds)
        object.__setattr__(self, "rms_thresholds", t)
        if len(t) != 4 or any(x <= 0 for x in t):
            raise ValueError("need 4 positive thresholds")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if self.step_out_rule < 1:
            raise ValueError("step_out_rule must be at least 1")


def oracle_rate(exercise_set: ExerciseSet, oracle: OracleRater) -> int:
    """Rate a set from its data alone.

    Step-outs at or above the rule force 5; otherwise the rating is
    1 + the number of thresholds lying below the mean sway RMS of the
    usable trials. Both quantities are entries of the 61-feature vector,
    which is what makes oracle labels learnable by the classifier.
    """
    usable = [tr for tr in exercise_set.trials if tr.n_samples >= 2]
    if not usable:
        raise ValueError("no usable trial")
    step_outs = sum(1 for tr in exercise_set.trials if tr.step_out)
    if step_outs >= oracle.step_out_rule:
        return 5
    mean_rms = float(np.mean([trial_metrics(tr).rms_sway for tr in usable]))
    return 1 + sum(1 for t in oracle.rms_thresholds if mean_rms > t)


def _ar1(rng: np.random.Generator, n: int, phi: float, stationary_sd: float) -> np.ndarray:
    # x_k = phi x_{k-1} + e_k started from a stationary draw, so the
    # spread is stationary_sd from the first sample on.
    sigma_e = stationary_sd * np.sqrt(1.0 - phi * phi)
    x0 = rng.standard_normal() * stationary_sd
    z = rng.standard_normal(n)
    y, _ = lfilter([1.0], [1.0, -phi], sigma_e * z, zi=np.array([phi * x0]))
    return y


def _set_rng(config: SynthConfig, p_idx: int, sess_idx: int, set_idx: int):
    ss = np.random.SeedSequence(entropy=config.seed,
                                spawn_key=(p_idx, sess_idx, set_idx))
    return np.random.Generator(np.random.PCG64(ss))


def _participant_skill(config: SynthConfig, p_idx: int) -> float:
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(p_idx,))
    rng = np.random.Generator(np.random.PCG64(ss))
    return float(np.exp(rng.standard_normal() * config.participant_skill_sd))


def _make_trial(rng, config: SynthConfig, stationary_sd: float,
                step_out: bool) -> SwayTrial:
    rate = config.sample_rate_hz
    if step_out:
        # Truncation in (10, 30) s for the standard 30-s protocol; short
        # custom durations shrink the window proportionally.
        hi = min(30.0, config.trial_duration_s)
        lo = min(10.0, hi / 2.0)
        cutoff = rng.uniform(lo, hi)
        n = max(2, int(cutoff * rate))
    else:
        n = int(round(config.trial_duration_s * rate)) + 1
    t = np.arange(n) / rate
    pitch = _ar1(rng, n, config.ar_coefficient, stationary_sd)
    roll = _ar1(rng, n, config.ar_coefficient, ROLL_SCALE * stationary_sd)
    return SwayTrial(t=t, pitch=pitch, roll=roll, step_out=step_out,
                     sample_rate_hz=rate,
                     nominal_duration_s=config.trial_duration_s)


def _neighbor_flip(rng, rating: int) -> int:
    neighbors = [r for r in (rating - 1, rating + 1) if 1 <= r <= 5]
    return neighbors[int(rng.integers(0, len(neighbors)))]


def _descriptor_for(sess_idx: int, set_idx: int) -> ExerciseDescriptor:
    # Cosmetic variety only; conditions do not influence the signals.
    return ExerciseDescriptor(
        vision=Vision.CLOSED if set_idx % 2 else Vision.OPEN,
        stance=_STANCES[sess_idx % len(_STANCES)],
        head_motion=HeadMotion.NONE,
        surface=Surface.FOAM if (sess_idx // len(_STANCES)) % 2 else Surface.FIRM,
    )


def generate_dataset(config: SynthConfig,
                     oracle: OracleRater = OracleRater()) -> Dataset:
    """Deterministic function of config (and oracle): same inputs, same bits."""
    dataset, _ = generate_with_difficulty(config, oracle)
    return dataset


def generate_with_difficulty(config: SynthConfig,
                             oracle: OracleRater = OracleRater()):
    """generate_dataset plus the per-set latent difficulties, for tests
    that need the hidden variable."""
    participants = tuple(f"P{k + 1:02d}" for k in range(config.n_participants))
    sets = []
    latent = []
    for p_idx, pid in enumerate(participants):
        skill = _participant_skill(config, p_idx)
        for sess_idx in range(config.sessions_per_participant):
            for set_idx in range(config.sets_per_session):
                rng = _set_rng(config, p_idx, sess_idx, set_idx)
                d = int(rng.integers(1, 6))
                stationary_sd = config.difficulty_sway_scale * d * skill
                trials = []
                for _ in range(config.trials_per_set):
                    step_out = bool(rng.random() < STEP_OUT_PROB[d])
                    trials.append(_make_trial(rng, config, stationary_sd, step_out))
                probe = ExerciseSet(
                    participant_id=pid, session_index=sess_idx + 1,
                    exercise=_descriptor_for(sess_idx, set_idx),
                    trials=tuple(trials), pt_rating=1, self_rating=1,
                )
                rating = oracle_rate(probe, oracle)
                if rng.random() < config.label_noise:
                    rating = _neighbor_flip(rng, rating)
                self_rating = rating
                if rng.random() < SELF_DISAGREE_PROB:
                    direction = 1 if rng.integers(0, 2) else -1
                    self_rating = min(5, max(1, rating + direction))
                sets.append(ExerciseSet(
                    participant_id=pid, session_index=sess_idx + 1,
                    exercise=probe.exercise, trials=tuple(trials),
                    pt_rating=rating, self_rating=self_rating,
                ))
                latent.append(d)
    return Dataset(sets=tuple(sets), participants=participants), tuple(latent)
