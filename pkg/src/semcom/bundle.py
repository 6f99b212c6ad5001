"""Portable containers for prompts, linguistic annotations, and attention maps.

A bundle is a directory with a ``manifest.json`` plus raw ``.bin`` payloads
(row-major little-endian float32). Bundles are immutable after load and safe
to share read-only across workers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

POS_TAGS = frozenset({"NN", "PROPN", "NUM", "ADJ", "VERB", "ADV", "ADP", "X"})

BUNDLE_VERSION = 1

MANIFEST_NAME = "manifest.json"


class BundleError(ValueError):
    """Raised when a bundle violates the manifest schema or an invariant."""


@dataclass(frozen=True)
class WordAnnotation:
    index: int
    text: str
    pos: str
    head_index: int  # -1 iff dependency root
    dep_label: str = ""


@dataclass
class AttentionMap:
    """Aggregated non-negative attention scores for one prompt word."""

    word_index: int
    values: np.ndarray  # float32, shape (height, width)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class BinaryAttentionMap:
    word_index: int
    mask: np.ndarray  # bool, shape (height, width)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def pixels(self) -> set[tuple[int, int]]:
        ys, xs = np.nonzero(self.mask)
        return {(int(x), int(y)) for x, y in zip(xs, ys)}


@dataclass
class RawScoreEntry:
    t: int
    block: int
    head: int
    direction: str  # "down" | "up"
    grid: np.ndarray  # float32, shape (h_b, w_b), values in [0, 1]


@dataclass
class RawScoreStack:
    """Sparse stack of per-step/block/head softmax-normalized score grids."""

    word_index: int
    entries: list[RawScoreEntry] = field(default_factory=list)


@dataclass
class SemComBundle:
    prompt: str
    image_width: int
    image_height: int
    words: list[WordAnnotation]
    maps: dict[int, AttentionMap | BinaryAttentionMap | RawScoreStack]
    source_image_id: str | None = None
    version: int = BUNDLE_VERSION

    def validate(self) -> None:
        if self.version != BUNDLE_VERSION:
            raise BundleError(f"unsupported bundle version {self.version}, expected {BUNDLE_VERSION}")
        if self.image_width <= 0 or self.image_height <= 0:
            raise BundleError("image dimensions must be positive")
        if not self.words:
            raise BundleError("bundle has no words")
        m = len(self.words)
        seen = set()
        roots = 0
        for w in self.words:
            if w.index in seen:
                raise BundleError(f"duplicate word index {w.index}")
            seen.add(w.index)
            if w.pos not in POS_TAGS:
                raise BundleError(f"word {w.index}: invalid pos tag {w.pos!r}")
            if w.head_index == -1:
                roots += 1
            elif not 0 <= w.head_index < m:
                raise BundleError(f"word {w.index}: head_index {w.head_index} out of range")
            if w.head_index == w.index:
                raise BundleError(f"word {w.index}: head_index equals own index")
        if seen != set(range(m)):
            raise BundleError("word indices must be 0..M-1")
        if roots != 1:
            raise BundleError(f"expected exactly one root word, found {roots}")
        if set(self.maps) != seen:
            raise BundleError("maps must carry exactly one entry per word")
        for idx, mp in self.maps.items():
            if mp.word_index != idx:
                raise BundleError(f"map keyed {idx} carries word_index {mp.word_index}")
            if isinstance(mp, AttentionMap):
                if mp.values.shape != (self.image_height, self.image_width):
                    raise BundleError(f"word {idx}: aggregated map shape {mp.values.shape} "
                                      f"does not match image dimensions")
                if np.any(mp.values < 0):
                    raise BundleError(f"word {idx}: aggregated map has negative values")
            elif isinstance(mp, BinaryAttentionMap):
                if mp.mask.shape != (self.image_height, self.image_width):
                    raise BundleError(f"word {idx}: binary map shape does not match image dimensions")
            elif isinstance(mp, RawScoreStack):
                for e in mp.entries:
                    if e.grid.size == 0:
                        raise BundleError(f"word {idx}: empty raw grid")
                    if np.any(e.grid < 0) or np.any(e.grid > 1):
                        raise BundleError(f"word {idx}: raw scores outside [0, 1]")
                    if e.direction not in ("down", "up"):
                        raise BundleError(f"word {idx}: bad direction {e.direction!r}")
            else:
                raise BundleError(f"word {idx}: unknown map type {type(mp).__name__}")


def _cubic_kernel(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Catmull-Rom cubic convolution kernel (a = -0.5)."""
    ax = np.abs(x)
    w = np.zeros_like(ax)
    near = ax <= 1.0
    far = (ax > 1.0) & (ax < 2.0)
    w[near] = (a + 2) * ax[near] ** 3 - (a + 3) * ax[near] ** 2 + 1
    w[far] = a * ax[far] ** 3 - 5 * a * ax[far] ** 2 + 8 * a * ax[far] - 4 * a
    return w


def _resize_weights(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) bicubic resampling matrix.

    Half-pixel-center coordinate mapping; out-of-range taps are clamped to
    the border sample (border replication).
    """
    out = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for i in range(n_out):
        s = (i + 0.5) * scale - 0.5
        base = int(np.floor(s))
        frac = s - base
        taps = np.arange(base - 1, base + 3)
        w = _cubic_kernel(frac - np.arange(-1, 3))
        for tap, wt in zip(taps, w):
            out[i, min(max(tap, 0), n_in - 1)] += wt
    return out


def bicubic_resize(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize a 2D grid with Catmull-Rom bicubic interpolation."""
    g = np.asarray(grid, dtype=np.float64)
    wy = _resize_weights(g.shape[0], height)
    wx = _resize_weights(g.shape[1], width)
    return wy @ g @ wx.T


def aggregate_attention(stack: RawScoreStack, target: tuple[int, int],
                        clamp: bool = True) -> AttentionMap:
    """Sum bicubically-upscaled score grids over steps, blocks, heads, and
    both directions into one per-word attention map.

    Bicubic overshoot can dip below zero; ``clamp`` pins the output at 0 so
    the map stays non-negative (disable only for linearity testing).
    """
    width, height = target
    if not stack.entries:
        raise BundleError(f"word {stack.word_index}: cannot aggregate an empty score stack")
    total = np.zeros((height, width), dtype=np.float64)
    for e in stack.entries:
        if e.grid.size == 0:
            raise BundleError(f"word {stack.word_index}: empty grid in score stack")
        if e.grid.shape == (height, width):
            total += e.grid
        else:
            total += bicubic_resize(e.grid, height, width)
    if clamp:
        np.maximum(total, 0.0, out=total)
    return AttentionMap(word_index=stack.word_index, values=total.astype(np.float32))


def binarize(amap: AttentionMap, xi: float) -> BinaryAttentionMap:
    """Threshold an attention map at ``xi * max(values)``.

    The argmax pixel is always retained; an all-zero map is degenerate and
    rejected.
    """
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must be in [0, 1], got {xi}")
    values = amap.values
    peak = float(values.max()) if values.size else 0.0
    if peak <= 0.0:
        raise BundleError(f"word {amap.word_index}: attention map has no positive value")
    mask = values >= xi * peak
    return BinaryAttentionMap(word_index=amap.word_index, mask=mask)


def _read_payload(path: str, height: int, width: int) -> np.ndarray:
    expected = width * height * 4
    size = os.path.getsize(path)
    if size != expected:
        raise BundleError(f"payload {os.path.basename(path)}: expected {expected} bytes "
                          f"({width}x{height} float32), found {size}")
    data = np.fromfile(path, dtype="<f4")
    return data.reshape(height, width)


def load_bundle(path: str) -> SemComBundle:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise BundleError(f"no {MANIFEST_NAME} in {path}")
    except json.JSONDecodeError as exc:
        raise BundleError(f"malformed manifest: {exc}")

    version = manifest.get("version")
    if version != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {version}, expected {BUNDLE_VERSION}")
    try:
        prompt = manifest["prompt"]
        width = int(manifest["image_width"])
        height = int(manifest["image_height"])
        words_raw = manifest["words"]
        maps_raw = manifest["maps"]
    except KeyError as exc:
        raise BundleError(f"manifest missing field {exc}")

    words = []
    for w in words_raw:
        try:
            words.append(WordAnnotation(index=int(w["index"]), text=w["text"],
                                        pos=w["pos"], head_index=int(w["head_index"]),
                                        dep_label=w.get("dep_label", "")))
        except KeyError as exc:
            raise BundleError(f"word record missing field {exc}")

    maps: dict[int, AttentionMap | BinaryAttentionMap | RawScoreStack] = {}
    for entry in maps_raw:
        try:
            word_index = int(entry["word_index"])
            kind = entry["kind"]
        except KeyError as exc:
            raise BundleError(f"map record missing field {exc}")
        if kind == "aggregated":
            values = _read_payload(os.path.join(path, entry["file"]), height, width)
            maps[word_index] = AttentionMap(word_index=word_index, values=values)
        elif kind == "binary":
            values = _read_payload(os.path.join(path, entry["file"]), height, width)
            if not np.all((values == 0.0) | (values == 1.0)):
                raise BundleError(f"word {word_index}: binary payload has values other than 0/1")
            maps[word_index] = BinaryAttentionMap(word_index=word_index, mask=values == 1.0)
        elif kind == "raw":
            entries = []
            for e in entry.get("entries", []):
                grid = _read_payload(os.path.join(path, e["file"]),
                                     int(e["height"]), int(e["width"]))
                entries.append(RawScoreEntry(t=int(e["t"]), block=int(e["block"]),
                                             head=int(e["head"]), direction=e["direction"],
                                             grid=grid))
            maps[word_index] = RawScoreStack(word_index=word_index, entries=entries)
        else:
            raise BundleError(f"word {word_index}: unknown map kind {kind!r}")

    bundle = SemComBundle(prompt=prompt, image_width=width, image_height=height,
                          words=words, maps=maps,
                          source_image_id=manifest.get("source_image_id"),
                          version=version)
    bundle.validate()
    return bundle


def _write_payload(path: str, grid: np.ndarray) -> None:
    np.ascontiguousarray(grid, dtype="<f4").tofile(path)


def save_bundle(bundle: SemComBundle, path: str) -> None:
    """Write a bundle directory; ``load_bundle`` round-trips bit-exactly."""
    bundle.validate()
    os.makedirs(path, exist_ok=True)
    maps_manifest = []
    for idx in sorted(bundle.maps):
        mp = bundle.maps[idx]
        if isinstance(mp, AttentionMap):
            fname = f"map_{idx:03d}.bin"
            _write_payload(os.path.join(path, fname), mp.values)
            maps_manifest.append({"word_index": idx, "kind": "aggregated", "file": fname})
        elif isinstance(mp, BinaryAttentionMap):
            fname = f"map_{idx:03d}.bin"
            _write_payload(os.path.join(path, fname), mp.mask.astype(np.float32))
            maps_manifest.append({"word_index": idx, "kind": "binary", "file": fname})
        else:
            entries = []
            for k, e in enumerate(mp.entries):
                fname = f"raw_{idx:03d}_{k:04d}.bin"
                _write_payload(os.path.join(path, fname), e.grid)
                entries.append({"t": e.t, "block": e.block, "head": e.head,
                                "direction": e.direction,
                                "width": e.grid.shape[1], "height": e.grid.shape[0],
                                "file": fname})
            maps_manifest.append({"word_index": idx, "kind": "raw", "entries": entries})

    manifest = {
        "version": bundle.version,
        "prompt": bundle.prompt,
        "image_width": bundle.image_width,
        "image_height": bundle.image_height,
        "words": [{"index": w.index, "text": w.text, "pos": w.pos,
                   "head_index": w.head_index, "dep_label": w.dep_label}
                  for w in bundle.words],
        "maps": maps_manifest,
    }
    if bundle.source_image_id is not None:
        manifest["source_image_id"] = bundle.source_image_id
    with open(os.path.join(path, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
