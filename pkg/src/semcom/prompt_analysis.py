"""Per-word semantic importance from dependency structure and mask overlap.

Pipeline: drop X-type words, build the boolean dependency matrix, weight
each arc by the mask overlap (mIoU) of the two words, then softmax the
accumulated per-word credit into an importance vector on the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .bundle import BinaryAttentionMap, WordAnnotation


class AnalysisError(ValueError):
    pass


@dataclass
class DependencyMatrix:
    order: list[int]          # retained original word indices
    booleans: np.ndarray      # bool, (M-zeta, M-zeta), row = head, column = dependent


@dataclass
class DependencyLevelMatrix:
    order: list[int]
    levels: np.ndarray        # float, (M-zeta, M-zeta), symmetric, unit diagonal


@dataclass
class ImportanceVector:
    order: list[int]
    s: np.ndarray             # sums to 1, each component in (0, 1)


def filter_words(words: list[WordAnnotation]) -> tuple[list[int], int]:
    """Return retained (non-X) word indices in prompt order and the X count."""
    if not words:
        raise AnalysisError("empty word list")
    retained = [w.index for w in sorted(words, key=lambda w: w.index) if w.pos != "X"]
    if not retained:
        raise AnalysisError("all words are X-type; no semantic content")
    return retained, len(words) - len(retained)


def build_dependency_matrices(words: list[WordAnnotation],
                              retained: list[int]) -> tuple[np.ndarray, DependencyMatrix]:
    """Boolean dependency matrix C (full) and its X-filtered compression C*.

    Row i / column j is true when word i heads an arc whose dependent is
    word j; the diagonal is always true.
    """
    m = len(words)
    c = np.eye(m, dtype=bool)
    for w in words:
        if w.head_index >= 0:
            c[w.head_index, w.index] = True
    keep = np.asarray(retained, dtype=int)
    c_star = c[np.ix_(keep, keep)]
    return c, DependencyMatrix(order=list(retained), booleans=c_star)


def miou(a: BinaryAttentionMap, b: BinaryAttentionMap) -> float:
    """Intersection-over-union of two binary masks of equal shape."""
    if a.mask.shape != b.mask.shape:
        raise AnalysisError(f"mask shapes differ: {a.mask.shape} vs {b.mask.shape}")
    union = int(np.count_nonzero(a.mask | b.mask))
    if union == 0:
        raise AnalysisError("mIoU undefined for two empty masks")
    inter = int(np.count_nonzero(a.mask & b.mask))
    return inter / union


def build_level_matrix(binary_maps: list[BinaryAttentionMap],
                       order: list[int] | None = None) -> DependencyLevelMatrix:
    """Pairwise mIoU matrix over the retained words' binary maps."""
    n = len(binary_maps)
    if order is None:
        order = [m.word_index for m in binary_maps]
    levels = np.ones((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            v = miou(binary_maps[i], binary_maps[j])
            levels[i, j] = v
            levels[j, i] = v
    return DependencyLevelMatrix(order=list(order), levels=levels)


def importance_scores(c_star: DependencyMatrix, d_star: DependencyLevelMatrix) -> np.ndarray:
    """Pre-softmax credit: overlap-weighted arcs where the word is head or
    dependent, with the self-pair counted once."""
    if c_star.order != d_star.order:
        raise AnalysisError("dependency and level matrices cover different words")
    cd = np.where(c_star.booleans, d_star.levels, 0.0)
    return cd.sum(axis=1) + cd.sum(axis=0) - np.diag(d_star.levels)


def importance(c_star: DependencyMatrix, d_star: DependencyLevelMatrix) -> ImportanceVector:
    r = importance_scores(c_star, d_star)
    return ImportanceVector(order=list(c_star.order), s=softmax(r))
