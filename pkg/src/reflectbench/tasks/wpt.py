"""Weather prediction: a two-state weather chain cued by a two-device sensor.

Sensor ``[1,0]`` selects the "stay" matrix ``[[p, 1-p], [1-p, p]]`` and
sensor ``[0,1]`` the "switch" matrix ``[[1-p, p], [p, 1-p]]``. The agent's
predictions are tallied per (today, sensor) context into its implied
transition matrices, which are compared with the true ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from reflectbench.tasks.base import Environment, TaskScore

WEATHER = ("sunny", "rainy")
SENSORS = ((1, 0), (0, 1))

# Pattern thresholds. Tunable; the labels come without cutoffs.
MATCH_TOL = 0.15
STAY_RATE = 0.85
SENSOR_SPREAD = 0.5
TODAY_SPREAD = 0.15

SYSTEM_PROMPT = (
    "You are an expert forecaster working in a weather station. There are two devices "
    "collecting data from nature. Your task is to predict tomorrow's weather based on "
    "(1) today's weather and (2) the current states of four sensor devices in the weather "
    "station. Here's how the task works: 1. There are two devices, each represented by "
    "either 0 (inactive) or 1 (active). 2. The device states will be given to you in the "
    "format [d1,d2], where each d is either 0 or 1; 3. Based on these device states and "
    "today's weather, you need to predict whether tomorrow's weather will be sunny or "
    "rainy. 4. After your prediction, I will inform you of the actual weather outcome. "
    "5. We will repeat this process multiple times, and you should try to improve your "
    "predictions based on the feedback. At each time, make your prediction of the next "
    "day's weather ('sunny' or 'rainy')."
)


def true_matrices(p: float) -> np.ndarray:
    """Shape (2, 2, 2): [sensor, today, next]."""
    stay = np.array([[p, 1 - p], [1 - p, p]], dtype=float)
    return np.stack([stay, stay[:, ::-1]])


@dataclass
class TransitionEstimate:
    matrices: np.ndarray  # [sensor, today, next]
    counts: np.ndarray  # [sensor, today]

    def to_dict(self) -> dict:
        return {
            "matrices": {
                f"[{s[0]},{s[1]}]": self.matrices[i].round(6).tolist()
                for i, s in enumerate(SENSORS)
            },
            "counts": self.counts.astype(int).tolist(),
        }


def estimate_internal_matrices(history) -> TransitionEstimate:
    """Tally predictions per context.

    ``history`` is an iterable of ``(today, sensor, prediction)`` index
    triples (extra trailing fields are ignored). Contexts that never
    occurred get the uniform row.
    """
    tallies = np.zeros((2, 2, 2))
    for row in history:
        today, sensor, pred = int(row[0]), int(row[1]), int(row[2])
        tallies[sensor, today, pred] += 1
    counts = tallies.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = np.where(counts[..., None] > 0, tallies / np.maximum(counts, 1)[..., None], 0.5)
    return TransitionEstimate(est, counts)


def score_wpt(estimate, truth) -> float | np.ndarray:
    """100 * (1 - MAE / Max_MAE) over the eight matrix entries, clamped.

    Max_MAE is the mean over entries of max(t, 1 - t), the error of the
    worst possible estimate. Leading batch axes are allowed on ``estimate``.
    """
    est = np.asarray(getattr(estimate, "matrices", estimate), dtype=float)
    true = np.asarray(truth, dtype=float)
    max_mae = np.maximum(true, 1 - true).mean()
    if max_mae <= 0:
        raise ValueError("Max_MAE is zero")
    mae = np.abs(est - true).reshape(*est.shape[:-3], 8).mean(axis=-1)
    out = np.clip(100.0 * (1.0 - mae / max_mae), 0.0, 100.0)
    return float(out) if out.ndim == 0 else out


def classify_wpt_pattern(estimate, truth) -> str:
    """Label the prediction pattern A-E.

    A: both sensor contexts match the truth.
    B: predictions follow today's weather in both sensor contexts.
    C: predictions follow the sensor but not today's weather.
    D: exactly one sensor context matches the truth.
    E: anything else.
    """
    est = np.asarray(getattr(estimate, "matrices", estimate), dtype=float)
    true = np.asarray(truth, dtype=float)
    matches = [bool(np.abs(est[s] - true[s]).max() <= MATCH_TOL + 1e-12) for s in range(2)]
    if all(matches):
        return "A"
    stay_rate = [np.diagonal(est[s]).mean() for s in range(2)]
    if min(stay_rate) >= STAY_RATE:
        return "B"
    sunny = est[..., 0]  # [sensor, today] -> P(predict sunny)
    sensor_spread = np.abs(sunny[0] - sunny[1]).mean()
    today_spread = np.abs(sunny[:, 0] - sunny[:, 1]).mean()
    if sensor_spread >= SENSOR_SPREAD and today_spread <= TODAY_SPREAD:
        return "C"
    if sum(matches) == 1:
        return "D"
    return "E"


class WptEnv(Environment):
    task_id = "wpt"
    system_prompt = SYSTEM_PROMPT
    options = WEATHER

    def __init__(self, config, seed):
        super().__init__(config, seed)
        self.p = float(config["p"])
        self.truth = true_matrices(self.p)
        self.today = int(self.rng.integers(2))
        self.sensor = int(self.rng.integers(2))
        # (today, sensor, prediction, actual_next)
        self.history: list[tuple[int, int, int, int]] = []

    def observation(self) -> str:
        s = SENSORS[self.sensor]
        return (
            f"Today's weather: {WEATHER[self.today]}. Sensor states: [{s[0]},{s[1]}]. "
            "What is your prediction of tomorrow's weather?"
        )

    def _step(self, action, raw):
        pred = WEATHER.index(action)
        stay_prob = self.truth[self.sensor, self.today, self.today]
        actual = self.today if self.rng.random() < stay_prob else 1 - self.today
        self.history.append((self.today, self.sensor, pred, actual))
        self.today = actual
        self.sensor = int(self.rng.integers(2))
        return f"The actual weather is {WEATHER[actual]}."

    def fallback_action(self, last_valid):
        return WEATHER[self.today]

    def oracle_action(self):
        return WEATHER[int(np.argmax(self.truth[self.sensor, self.today]))]

    def score(self) -> TaskScore:
        est = estimate_internal_matrices(self.history)
        s = score_wpt(est, self.truth)
        correct = sum(1 for h in self.history if h[2] == h[3])
        return TaskScore(
            self.task_id,
            s,
            metrics={
                "mae": float(np.abs(est.matrices - self.truth).mean()),
                "max_mae": float(np.maximum(self.truth, 1 - self.truth).mean()),
                "prediction_accuracy": correct / max(1, len(self.history)),
            },
            profile={"pattern": classify_wpt_pattern(est, self.truth), "estimate": est.to_dict()},
        )

    def hidden_values(self):
        return [f"{self.p}", f"{1 - self.p:.1f}", "transition matrix"]
