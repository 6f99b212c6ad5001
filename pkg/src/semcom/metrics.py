"""Perceptual scoring: similarity/quality oracles and their Weber-Fechner
fusion into a single utility.

The learned similarity and quality networks are deliberately absent; a
deterministic proxy and a table-driven scorer stand in behind the same
(D, Q) interface.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .packing import TransmittedPrefix
from .prompt_analysis import ImportanceVector

DEFAULT_OMEGA0 = 1.25
DEFAULT_OMEGA1 = 500.0
DEFAULT_OMEGA2 = 0.05
DEFAULT_Q_TH = 4.9827


class ScoringError(ValueError):
    pass


@dataclass
class JpsqParams:
    t_max: float
    omega0: float = DEFAULT_OMEGA0
    omega1: float = DEFAULT_OMEGA1
    omega2: float = DEFAULT_OMEGA2
    q_th: float = DEFAULT_Q_TH
    penalty: float = -DEFAULT_OMEGA1  # reward for infeasible allocations

    def __post_init__(self):
        if self.t_max <= 0 or min(self.omega0, self.omega1, self.omega2, self.q_th) <= 0:
            raise ValueError("weights, threshold, and t_max must be positive")
        if self.penalty >= 0:
            raise ValueError("penalty must be negative")


@dataclass
class QualityDistribution:
    """Probabilities over the ten aesthetic score classes 1..10."""

    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (10,) or np.any(self.c < 0) or abs(self.c.sum() - 1.0) > 1e-9:
            raise ValueError("quality distribution must be 10 non-negative probabilities summing to 1")


def nima_moments(dist: QualityDistribution) -> tuple[float, float]:
    scores = np.arange(1, 11)
    mu = float(np.dot(scores, dist.c))
    sigma = float(np.sqrt(np.dot((scores - mu) ** 2, dist.c)))
    return mu, sigma


def cosine_distance(f0: np.ndarray, f1: np.ndarray) -> float:
    f0 = np.asarray(f0, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    n0 = np.linalg.norm(f0)
    n1 = np.linalg.norm(f1)
    if n0 == 0 or n1 == 0:
        raise ScoringError("cosine distance undefined for zero vectors")
    return 1.0 - float(np.dot(f0, f1)) / (n0 * n1)


def normalize_similarity(t: float, t_max: float) -> float:
    """Map a distance in [0, t_max] onto similarity in [1, 0], clamping
    out-of-range distances."""
    if t_max <= 0:
        raise ScoringError("t_max must be positive")
    return min(1.0, max(0.0, (t_max - t) / t_max))


def jpsq(d: float, q: float, params: JpsqParams) -> float:
    """Weber-Fechner fusion of normalized similarity and log quality ratio."""
    if q <= 0:
        raise ScoringError("quality must be positive")
    return normalize_similarity(d, params.t_max) * math.log(params.omega0 * q / params.q_th)


def user_utility(jpsq_value: float, q: float, b_tokens: float, params: JpsqParams,
                 cap: float | None = None) -> float:
    """Per-user objective: gated perceptual value minus bandwidth cost; an
    allocation outside [0, cap] earns the flat penalty."""
    if b_tokens < 0 or (cap is not None and b_tokens > cap):
        return params.penalty
    gate = 1.0 if q >= params.q_th else 0.0
    return params.omega1 * jpsq_value * gate - params.omega2 * b_tokens


class ProxyScorer:
    """Deterministic model-free stand-in for the learned scorers.

    Coverage is the importance-weighted fraction of each word's segment that
    was transmitted; distance decays linearly with coverage and quality rises
    quadratically from the floor to the source score.
    """

    def __init__(self, importance: ImportanceVector, t_max: float,
                 q_src: float = 5.2651, q_lb: float = 4.9827):
        if t_max <= 0:
            raise ScoringError("t_max must be positive")
        if q_src < q_lb:
            raise ScoringError("source quality below the floor")
        self.importance = importance
        self.t_max = t_max
        self.q_src = q_src
        self.q_lb = q_lb

    def coverage(self, prefix: TransmittedPrefix) -> float:
        total = 0.0
        for idx, s_z in zip(self.importance.order, self.importance.s):
            total += float(s_z) * prefix.coverage.get(idx, 0.0)
        return total

    def score(self, prefix: TransmittedPrefix) -> tuple[float, float]:
        cov = self.coverage(prefix)
        d = self.t_max * (1.0 - cov)
        q = self.q_lb + (self.q_src - self.q_lb) * (1.0 - (1.0 - cov) ** 2)
        return d, q


SCORE_TABLE_HEADER = ["image_id", "tokens", "dreamsim", "nima_mu"]


class ScoreTable:
    """Piecewise-linear (D, Q) lookup keyed by image id over token budgets."""

    def __init__(self, rows: dict[str, list[tuple[int, float, float]]]):
        self.rows = {}
        for image_id, pts in rows.items():
            pts = sorted(pts)
            if not pts:
                raise ScoringError(f"image {image_id}: empty score table")
            self.rows[image_id] = pts

    @classmethod
    def from_csv(cls, path: str) -> "ScoreTable":
        rows: dict[str, list[tuple[int, float, float]]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != SCORE_TABLE_HEADER:
                raise ScoringError(f"bad score table header: {header}")
            for rec in reader:
                image_id, tokens, d, q = rec
                rows.setdefault(image_id, []).append((int(tokens), float(d), float(q)))
        if not rows:
            raise ScoringError("score table has no rows")
        return cls(rows)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SCORE_TABLE_HEADER)
            for image_id in sorted(self.rows):
                for tokens, d, q in self.rows[image_id]:
                    writer.writerow([image_id, tokens, repr(d), repr(q)])

    def image_ids(self) -> list[str]:
        return sorted(self.rows)

    def score(self, image_id: str, tokens: float) -> tuple[float, float]:
        if image_id not in self.rows:
            raise ScoringError(f"unknown image id {image_id!r}")
        pts = self.rows[image_id]
        xs = np.array([p[0] for p in pts], dtype=float)
        ds = np.array([p[1] for p in pts], dtype=float)
        qs = np.array([p[2] for p in pts], dtype=float)
        return float(np.interp(tokens, xs, ds)), float(np.interp(tokens, xs, qs))


def table_scorer(table: ScoreTable, image_id: str, tokens: float) -> tuple[float, float]:
    return table.score(image_id, tokens)


def calibrate_tmax(empty_distance, items, n: int) -> float:
    """Mean no-transmission distance over the first ``n`` corpus items.

    ``empty_distance`` maps one item to its D when nothing was transmitted.
    """
    if n < 1:
        raise ScoringError("n must be >= 1")
    items = list(items)
    if not items:
        raise ScoringError("empty calibration corpus")
    sample = items[:n]
    return float(np.mean([empty_distance(item) for item in sample]))
