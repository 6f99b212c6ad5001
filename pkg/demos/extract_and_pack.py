"""Walk one prompt through the sender pipeline: binarize per-word attention,
clean it, rank words by importance, and pack a de-duplicated token stream.

Run: python3 demos/extract_and_pack.py
"""

import numpy as np

from semcom import SemComBundle, AttentionMap, WordAnnotation, reduction_ratio, truncate
from semcom.harness import run_pipeline

SIZE = 64


def gaussian_map(index, cx, cy, sigma):
    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    values = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * sigma ** 2))
    return AttentionMap(word_index=index, values=values.astype(np.float32))


def main():
    words = [
        WordAnnotation(0, "A", "X", 2, "det"),
        WordAnnotation(1, "blue", "ADJ", 2, "amod"),
        WordAnnotation(2, "car", "NN", 3, "nsubj"),
        WordAnnotation(3, "driving", "VERB", -1, "root"),
        WordAnnotation(4, "through", "ADP", 3, "prep"),
        WordAnnotation(5, "the", "X", 6, "det"),
        WordAnnotation(6, "city", "NN", 4, "pobj"),
        WordAnnotation(7, ".", "X", 3, "punct"),
    ]
    centers = {0: (20, 30, 5), 1: (22, 32, 9), 2: (26, 33, 8), 3: (32, 32, 10),
               4: (40, 30, 9), 5: (46, 28, 5), 6: (50, 22, 8), 7: (33, 35, 5)}
    maps = {i: gaussian_map(i, *centers[i]) for i in range(8)}
    bundle = SemComBundle(prompt="A blue car driving through the city.",
                          image_width=SIZE, image_height=SIZE, words=words, maps=maps)

    result = run_pipeline(bundle)

    print("importance (descending):")
    order = result.importance.order
    ranked = sorted(zip(order, result.importance.s), key=lambda t: -t[1])
    for idx, score in ranked:
        print(f"  {words[idx].text:<8} s = {score:.4f}")

    info = result.info
    print(f"\npacked stream: {info.total_tokens} tokens "
          f"({len(info.blocks)} blocks, duplicates removed)")
    ratio = reduction_ratio(info, (SIZE, SIZE))
    print(f"reduction vs full image: {100 * ratio:.1f}%")

    for budget in (0, info.total_tokens // 2, info.total_tokens):
        prefix = truncate(info, budget)
        cov = np.mean(list(prefix.coverage.values())) if prefix.coverage else 0.0
        print(f"budget {budget:5d} -> {prefix.tokens_used:5d} sent, "
              f"mean word coverage {100 * cov:.1f}%")


if __name__ == "__main__":
    main()
