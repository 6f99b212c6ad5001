import numpy as np
import pytest

from semcom.bundle import (AttentionMap, BinaryAttentionMap, SemComBundle,
                           WordAnnotation)


def make_map(word_index, values):
    return AttentionMap(word_index=word_index,
                        values=np.asarray(values, dtype=np.float32))


def make_mask(word_index, mask):
    return BinaryAttentionMap(word_index=word_index,
                              mask=np.asarray(mask, dtype=bool))


def mask_from_pixels(word_index, pixels, width, height):
    mask = np.zeros((height, width), dtype=bool)
    for x, y in pixels:
        mask[y, x] = True
    return BinaryAttentionMap(word_index=word_index, mask=mask)


def blue_car_words():
    """'A blue car driving through the city .' with the root verb at index 3."""
    return [
        WordAnnotation(0, "A", "X", 2, "det"),
        WordAnnotation(1, "blue", "ADJ", 2, "amod"),
        WordAnnotation(2, "car", "NN", 3, "nsubj"),
        WordAnnotation(3, "driving", "VERB", -1, "ROOT"),
        WordAnnotation(4, "through", "ADP", 3, "prep"),
        WordAnnotation(5, "the", "X", 6, "det"),
        WordAnnotation(6, "city", "NN", 4, "pobj"),
        WordAnnotation(7, ".", "X", 3, "punct"),
    ]


def blob(cx, cy, r, width, height, peak=1.0):
    """Radially decaying attention blob; positive inside radius r."""
    ys, xs = np.mgrid[0:height, 0:width]
    dist = np.sqrt((xs - cx) ** 2 + (ys - cy) ** 2)
    return np.clip(peak * (1.0 - dist / r), 0.0, None).astype(np.float32)


@pytest.fixture
def blue_car_bundle():
    """Synthetic 64x64 bundle mirroring the worked prompt: overlapping blobs
    centered so related words share area."""
    width = height = 64
    words = blue_car_words()
    centers = {
        0: (20, 30, 26), 1: (14, 40, 20), 2: (28, 32, 30), 3: (32, 32, 30),
        4: (40, 32, 20), 5: (46, 30, 24), 6: (54, 14, 26), 7: (32, 34, 20),
    }
    maps = {i: AttentionMap(word_index=i, values=blob(cx, cy, r, width, height))
            for i, (cx, cy, r) in centers.items()}
    return SemComBundle(prompt="A blue car driving through the city .",
                        image_width=width, image_height=height,
                        words=words, maps=maps, source_image_id="bluecar")
