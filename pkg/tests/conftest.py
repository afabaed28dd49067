"""Shared helpers: hand-built trials/sets and a small synthetic dataset."""

import numpy as np
import pytest

from swayrater import ExerciseDescriptor, ExerciseSet, SwayTrial
from swayrater.synthgen import SynthConfig, generate_dataset


def make_trial(pitch, roll, rate=50.0, step_out=False, duration=None,
               t=None):
    """SwayTrial from raw angle arrays; time defaults to a uniform grid."""
    pitch = np.asarray(pitch, dtype=np.float64)
    roll = np.asarray(roll, dtype=np.float64)
    if t is None:
        t = np.arange(len(pitch)) / rate if rate > 0 else np.zeros(len(pitch))
    if duration is None:
        duration = float(t[-1]) if len(t) else 0.0
        duration = max(duration, 1e-6)
    return SwayTrial(t=t, pitch=pitch, roll=roll, step_out=step_out,
                     sample_rate_hz=rate, nominal_duration_s=duration)


def make_set(trials, pid="P01", session=1, pt=1, self_rating=None):
    return ExerciseSet(
        participant_id=pid, session_index=session,
        exercise=ExerciseDescriptor(),
        trials=tuple(trials), pt_rating=pt,
        self_rating=pt if self_rating is None else self_rating,
    )


SMALL_CONFIG = SynthConfig(
    seed=3, n_participants=4, sessions_per_participant=6,
    sets_per_session=2, trials_per_set=2,
    sample_rate_hz=20.0, trial_duration_s=5.0,
)


@pytest.fixture(scope="session")
def small_dataset():
    """48 sets over 4 participants; big enough for nested CV, still fast."""
    return generate_dataset(SMALL_CONFIG)
