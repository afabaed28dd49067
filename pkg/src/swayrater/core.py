"""Domain types for sway trials, exercise sets, and datasets, plus file I/O.

A trial is one timed pitch/roll recording. An exercise set bundles the
trials performed back to back under one condition together with the two
ratings given for the whole set (therapist and participant). A dataset is
a list of sets plus the participant roster, which drives the
leave-one-participant-out splits downstream.

Datasets live on disk as a JSON manifest plus one CSV file per trial
(header ``t,pitch,roll``). Integer fields round-trip bit-exactly through
the manifest; sample values are written in shortest exact decimal form,
which preserves more than the required six significant digits.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator

import numpy as np

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "swayrater-dataset"
MANIFEST_VERSION = 1

# Fraction of the nominal duration a trial must reach unless it was
# terminated by a step-out.
MIN_COMPLETE_FRACTION = 0.9


class DataError(Exception):
    """Invalid dataset content (bad file, bad field, broken invariant)."""


class Vision(Enum):
    OPEN = "open"
    CLOSED = "closed"


class Stance(Enum):
    FEET_APART = "feet-apart"
    FEET_TOGETHER = "feet-together"
    SEMI_TANDEM = "semi-tandem"
    TANDEM = "tandem"
    SINGLE_LEG = "single-leg"


class HeadMotion(Enum):
    NONE = "none"
    PITCH = "pitch"
    YAW = "yaw"


class Surface(Enum):
    FIRM = "firm"
    FOAM = "foam"


@dataclass(frozen=True)
class SwaySample:
    """One sample: time since trial start (s) and sway angles (deg)."""

    t: float
    pitch: float
    roll: float


@dataclass(frozen=True)
class SwayTrial:
    """One recorded trial.

    Arrays are stored as float64 and treated as immutable. Positive pitch
    is a forward lean and positive roll a rightward lean; the convention
    is documentation only, every downstream metric is sign-symmetric or
    mean-based. Domain invariants (monotone time, completeness) are
    checked by validate_trial, not here, so invalid files can still be
    loaded far enough to be reported.
    """

    t: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray
    step_out: bool = False
    sample_rate_hz: float = 50.0
    nominal_duration_s: float = 30.0

    def __post_init__(self):
        for name in ("t", "pitch", "roll"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.t) == len(self.pitch) == len(self.roll)):
            raise ValueError("t, pitch, roll must have equal length")
        if self.sample_rate_hz <= 0 or self.nominal_duration_s <= 0:
            raise ValueError("rates and durations must be positive")

    @property
    def n_samples(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        """Elapsed time t_last - t_first; 0.0 for fewer than 2 samples."""
        if self.n_samples < 2:
            return 0.0
        return float(self.t[-1] - self.t[0])

    @property
    def samples(self) -> Iterator[SwaySample]:
        for i in range(self.n_samples):
            yield SwaySample(float(self.t[i]), float(self.pitch[i]), float(self.roll[i]))


@dataclass(frozen=True)
class ExerciseDescriptor:
    """Condition under which a set was performed."""

    vision: Vision = Vision.OPEN
    stance: Stance = Stance.FEET_APART
    head_motion: HeadMotion = HeadMotion.NONE
    surface: Surface = Surface.FIRM


@dataclass(frozen=True)
class ExerciseSet:
    """A rated block of consecutive trials of one exercise.

    session_index is 1-based; the reference protocol uses 1..18 but only
    the lower bound is enforced so longer studies still load. Ratings use
    the 1..5 scale, 1 = easy/stable through 5 = difficult/unsafe.
    """

    participant_id: str
    session_index: int
    exercise: ExerciseDescriptor
    trials: tuple[SwayTrial, ...]
    pt_rating: int
    self_rating: int

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))


@dataclass(frozen=True)
class Dataset:
    sets: tuple[ExerciseSet, ...]
    participants: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "participants", tuple(self.participants))
        roster = set(self.participants)
        if len(roster) != len(self.participants):
            raise DataError("duplicate participant in roster")
        for s in self.sets:
            if s.participant_id not in roster:
                raise DataError(
                    f"participant {s.participant_id!r} missing from roster"
                )

    def sets_for(self, participant_id: str) -> tuple[ExerciseSet, ...]:
        return tuple(s for s in self.sets if s.participant_id == participant_id)


def group_to_three(rating5: int) -> int:
    """Collapse the 1..5 rating scale to 3 levels: {1,2} 1, {3,4} 2, {5} 3."""
    if rating5 not in (1, 2, 3, 4, 5):
        raise ValueError(f"rating out of range: {rating5!r}")
    return {1: 1, 2: 1, 3: 2, 4: 2, 5: 3}[rating5]


def validate_trial(trial: SwayTrial) -> list[str]:
    """Violation descriptions for one trial; empty list when clean."""
    out = []
    if trial.n_samples == 0:
        return ["trial empty"]
    t, pitch, roll = trial.t, trial.pitch, trial.roll
    if not (np.isfinite(pitch).all() and np.isfinite(roll).all() and np.isfinite(t).all()):
        out.append("non-finite sample values")
    else:
        if t[0] < 0:
            out.append("negative timestamp")
        if trial.n_samples >= 2 and not (np.diff(t) > 0).all():
            out.append("non-monotone timestamps")
    last_t = float(t[-1])
    if trial.step_out:
        if last_t > trial.nominal_duration_s:
            out.append("step-out trial exceeds nominal duration")
    elif last_t < MIN_COMPLETE_FRACTION * trial.nominal_duration_s:
        out.append("trial too short for non-step-out")
    return out


def validate_set(exercise_set: ExerciseSet) -> list[str]:
    """All invariant violations of a set; empty iff well formed.

    Violations are returned rather than raised so a loader can report
    every problem in a file at once.
    """
    out = []
    if len(exercise_set.trials) == 0:
        out.append("trials empty")
    elif len(exercise_set.trials) > 6:
        out.append("too many trials")
    if exercise_set.session_index < 1:
        out.append("session_index out of range")
    if exercise_set.pt_rating not in (1, 2, 3, 4, 5):
        out.append("pt_rating out of range")
    if exercise_set.self_rating not in (1, 2, 3, 4, 5):
        out.append("self_rating out of range")
    for trial in exercise_set.trials:
        out.extend(validate_trial(trial))
    return out


def _format_float(x: float) -> str:
    # repr is the shortest string that parses back to the same float, so
    # the written file is exact, not merely 6-digit accurate.
    return repr(float(x))


def write_trial_file(trial: SwayTrial, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "pitch", "roll"])
        for i in range(trial.n_samples):
            writer.writerow(
                [
                    _format_float(trial.t[i]),
                    _format_float(trial.pitch[i]),
                    _format_float(trial.roll[i]),
                ]
            )


def read_trial_file(path: Path, step_out: bool, sample_rate_hz: float,
                    nominal_duration_s: float) -> SwayTrial:
    if not path.is_file():
        raise DataError(f"{path}: missing file")
    t, pitch, roll = [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "pitch", "roll"]:
            raise DataError(f"{path}:1: expected header t,pitch,roll")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t.append(float(row[0]))
                pitch.append(float(row[1]))
                roll.append(float(row[2]))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: malformed row {row!r}") from None
    trial = SwayTrial(
        t=np.array(t), pitch=np.array(pitch), roll=np.array(roll),
        step_out=step_out, sample_rate_hz=sample_rate_hz,
        nominal_duration_s=nominal_duration_s,
    )
    for violation in validate_trial(trial):
        raise DataError(f"{path}: {violation}")
    return trial


def _require(condition: bool, message: str):
    if not condition:
        raise DataError(message)


def load_dataset(manifest_path: str | Path) -> Dataset:
    """Load and validate a dataset from its manifest.

    manifest_path may be the manifest file itself or a directory
    containing ``manifest.json``. Every reported problem carries file
    context; semantic problems also carry the set ordinal.
    """
    path = Path(manifest_path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise DataError(f"{path}: missing file")
    try:
        with path.open(encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: malformed manifest: {exc.msg}") from None

    _require(isinstance(doc, dict), f"{path}: manifest must be a JSON object")
    _require(doc.get("format") == MANIFEST_FORMAT,
             f"{path}: not a {MANIFEST_FORMAT} manifest")
    _require(doc.get("version") == MANIFEST_VERSION,
             f"{path}: unsupported manifest version {doc.get('version')!r}")
    participants = doc.get("participants")
    _require(isinstance(participants, list) and all(isinstance(p, str) for p in participants),
             f"{path}: participants must be a list of strings")
    records = doc.get("sets")
    _require(isinstance(records, list), f"{path}: sets must be a list")

    base = path.parent
    sets = []
    for k, rec in enumerate(records):
        where = f"{path}: set #{k}"
        _require(isinstance(rec, dict), f"{where}: record must be an object")
        try:
            exercise = ExerciseDescriptor(
                vision=Vision(rec["vision"]),
                stance=Stance(rec["stance"]),
                head_motion=HeadMotion(rec["head_motion"]),
                surface=Surface(rec["surface"]),
            )
            pid = rec["participant_id"]
            session_index = rec["session_index"]
            pt_rating = rec["pt_rating"]
            self_rating = rec["self_rating"]
            trial_entries = rec["trials"]
        except KeyError as exc:
            raise DataError(f"{where}: missing field {exc.args[0]!r}") from None
        except ValueError as exc:
            raise DataError(f"{where}: {exc}") from None
        for name, value in (("session_index", session_index),
                            ("pt_rating", pt_rating), ("self_rating", self_rating)):
            _require(isinstance(value, int) and not isinstance(value, bool),
                     f"{where}: {name} must be an integer")
        _require(isinstance(pid, str), f"{where}: participant_id must be a string")
        _require(isinstance(trial_entries, list), f"{where}: trials must be a list")

        sample_rate = float(rec.get("sample_rate_hz", 50.0))
        nominal = float(rec.get("nominal_duration_s", 30.0))
        trials = []
        for entry in trial_entries:
            _require(isinstance(entry, dict) and "file" in entry and "step_out" in entry,
                     f"{where}: each trial entry needs file and step_out")
            _require(isinstance(entry["step_out"], bool),
                     f"{where}: step_out must be a boolean")
            trials.append(read_trial_file(
                base / entry["file"], step_out=entry["step_out"],
                sample_rate_hz=sample_rate, nominal_duration_s=nominal,
            ))
        exercise_set = ExerciseSet(
            participant_id=pid, session_index=session_index, exercise=exercise,
            trials=tuple(trials), pt_rating=pt_rating, self_rating=self_rating,
        )
        violations = validate_set(exercise_set)
        if violations:
            raise DataError(f"{where}: " + "; ".join(violations))
        sets.append(exercise_set)

    try:
        return Dataset(sets=tuple(sets), participants=tuple(participants))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write manifest + trial files under out_dir; returns the manifest path.

    Output is deterministic for a given Dataset (fixed file naming, fixed
    key order, exact float text), so identical datasets produce
    byte-identical trees.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for k, s in enumerate(dataset.sets):
        entries = []
        for j, trial in enumerate(s.trials):
            rel = f"trials/set{k:04d}_t{j + 1}.csv"
            write_trial_file(trial, out / rel)
            entries.append({"file": rel, "step_out": trial.step_out})
        rate = s.trials[0].sample_rate_hz if s.trials else 50.0
        nominal = s.trials[0].nominal_duration_s if s.trials else 30.0
        records.append({
            "participant_id": s.participant_id,
            "session_index": s.session_index,
            "vision": s.exercise.vision.value,
            "stance": s.exercise.stance.value,
            "head_motion": s.exercise.head_motion.value,
            "surface": s.exercise.surface.value,
            "pt_rating": s.pt_rating,
            "self_rating": s.self_rating,
            "sample_rate_hz": rate,
            "nominal_duration_s": nominal,
            "trials": entries,
        })
    doc = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "participants": list(dataset.participants),
        "sets": records,
    }
    manifest = out / MANIFEST_NAME
    with manifest.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return manifest
