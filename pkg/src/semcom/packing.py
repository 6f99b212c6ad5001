"""Importance-ordered, de-duplicated pixel-token stream and budget truncation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .prompt_analysis import ImportanceVector
from .segmentation import CleanSegment

Pixel = tuple[int, int]


class PackingError(ValueError):
    pass


@dataclass
class SemanticInfo:
    blocks: list[tuple[int, list[Pixel]]]  # (word_index, row-major pixels), descending importance
    total_tokens: int
    segments: dict[int, CleanSegment] = field(default_factory=dict)  # originals, for coverage

    def flatten(self) -> list[Pixel]:
        out: list[Pixel] = []
        for _, pixels in self.blocks:
            out.extend(pixels)
        return out


@dataclass
class TransmittedPrefix:
    pixels: list[Pixel]
    tokens_used: int
    coverage: dict[int, float]  # per retained word: fraction of its segment transmitted


def pack(segments: dict[int, CleanSegment], s: ImportanceVector) -> SemanticInfo:
    """Order segments by descending importance (ties by prompt position) and
    emit each as the set difference against all earlier blocks."""
    if set(segments) != set(s.order):
        raise PackingError("segments and importance vector cover different words")
    ranked = sorted(s.order, key=lambda w: (-s.s[s.order.index(w)], w))
    sent: set[Pixel] = set()
    blocks: list[tuple[int, list[Pixel]]] = []
    for w in ranked:
        fresh = segments[w].pixels - sent
        blocks.append((w, sorted(fresh, key=lambda p: (p[1], p[0]))))
        sent |= fresh
    return SemanticInfo(blocks=blocks, total_tokens=len(sent), segments=dict(segments))


def truncate(info: SemanticInfo, budget_tokens: int) -> TransmittedPrefix:
    """First ``budget_tokens`` pixels of the flattened stream; coverage is
    measured against each word's original (pre-dedup) segment."""
    if budget_tokens < 0:
        raise PackingError("budget must be non-negative")
    stream = info.flatten()
    prefix = stream[:budget_tokens]
    sent = set(prefix)
    coverage = {}
    for w, seg in info.segments.items():
        coverage[w] = len(seg.pixels & sent) / len(seg.pixels) if seg.pixels else 0.0
    return TransmittedPrefix(pixels=prefix, tokens_used=len(prefix), coverage=coverage)


def reduction_ratio(info: SemanticInfo, image: tuple[int, int]) -> float:
    """Fraction of source pixels that are never transmitted."""
    width, height = image
    if width * height <= 0:
        raise PackingError("image area must be positive")
    return 1.0 - info.total_tokens / (width * height)


TOKEN_WIRE_BYTES = 11  # 4-byte LE x, 4-byte LE y, 3 bytes RGB


def dump_stream(info: SemanticInfo, rgb=lambda p: (0, 0, 0)) -> bytes:
    """Serialize the flattened stream as 11-byte wire tokens."""
    out = bytearray()
    for x, y in info.flatten():
        out += int(x).to_bytes(4, "little")
        out += int(y).to_bytes(4, "little")
        out += bytes(rgb((x, y)))
    return bytes(out)
