"""Rule-based tokenization, part-of-speech tagging, and head assignment.

The tag set matches the bundle manifest contract: NN, PROPN, NUM, ADJ, VERB,
ADV, ADP, X. When spaCy is installed a full statistical pipeline can be
swapped in via ``spacy_annotator``; the rule-based path needs no models and
is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass


class LinguisticsError(ValueError):
    """Raised when a prompt cannot be annotated."""


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    pos: str
    head_index: int  # -1 iff root
    dep_label: str


STOP_WORDS = frozenset({
    "a", "an", "the", "this", "that", "these", "those", "and", "or", "but",
    "it", "its", "they", "them", "his", "her", "their", "of",
    "is", "are", "was", "were", "be", "been", "being",
})

ADPOSITIONS = frozenset({
    "through", "across", "near", "above", "below", "beside", "under", "over",
    "along", "toward", "towards", "in", "on", "at", "against", "past",
    "from", "into", "onto", "by", "down", "up", "inside", "outside",
    "between", "behind", "around", "with", "without", "beneath", "during",
})

NUMBER_WORDS = frozenset({
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
    "ten", "eleven", "twelve",
})

ADJECTIVES = frozenset({
    "blue", "red", "green", "yellow", "white", "black", "purple", "silver",
    "brown", "golden", "grey", "gray", "orange", "old", "young", "small",
    "large", "big", "bright", "dark", "rusty", "wooden", "quiet", "ancient",
    "tiny", "giant", "calm", "busy", "narrow", "distant", "snowy", "rocky",
    "foggy", "steep", "fresh", "warm", "cold", "painted", "cloudy", "sunny",
    "shallow", "tall", "windy", "muddy", "crowded", "tired", "empty",
})


def tokenize(prompt: str) -> list[str]:
    """Split on whitespace; sentence-final punctuation becomes its own token."""
    tokens: list[str] = []
    for chunk in prompt.split():
        core = chunk.rstrip(".,!?;:")
        trail = chunk[len(core):]
        if core:
            tokens.append(core)
        for ch in trail:
            tokens.append(ch)
    return tokens


def tag(token: str, index: int) -> str:
    low = token.lower()
    if not any(c.isalnum() for c in token):
        return "X"
    if low in STOP_WORDS:
        return "X"
    if low in ADPOSITIONS:
        return "ADP"
    if low in NUMBER_WORDS or low.isdigit():
        return "NUM"
    if low in ADJECTIVES:
        return "ADJ"
    if low.endswith("ly") and len(low) > 3:
        return "ADV"
    if (low.endswith("ing") or low.endswith("ed")) and len(low) > 4:
        return "VERB"
    if index > 0 and token[:1].isupper():
        return "PROPN"
    return "NN"


def _next_noun(tags: list[str], start: int) -> int | None:
    for j in range(start + 1, len(tags)):
        if tags[j] in ("NN", "PROPN"):
            return j
    return None


def annotate(prompt: str) -> list[Token]:
    """Tokenize, tag, and assign one head per token with a single root.

    The root is the first verb, falling back to the first noun and then the
    first non-X token. Adjectives and numerals attach to the next noun,
    nouns to a governing adposition or the root, everything else to the root.
    """
    texts = tokenize(prompt)
    if not texts:
        raise LinguisticsError("empty prompt")
    tags = [tag(t, i) for i, t in enumerate(texts)]

    root = next((i for i, p in enumerate(tags) if p == "VERB"), None)
    if root is None:
        root = next((i for i, p in enumerate(tags) if p in ("NN", "PROPN")), None)
    if root is None:
        root = next((i for i, p in enumerate(tags) if p != "X"), None)
    if root is None:
        raise LinguisticsError("prompt has no content words")

    tokens: list[Token] = []
    for i, (text, pos) in enumerate(zip(texts, tags)):
        if i == root:
            tokens.append(Token(i, text, pos, -1, "root"))
            continue
        if pos in ("ADJ", "NUM"):
            head = _next_noun(tags, i)
            label = "amod" if pos == "ADJ" else "nummod"
            tokens.append(Token(i, text, pos, root if head is None else head, label))
        elif pos in ("NN", "PROPN"):
            head, label = root, "nsubj" if i < root else "obj"
            for j in range(i - 1, -1, -1):
                if tags[j] in ("NN", "PROPN"):
                    break
                if tags[j] == "ADP":
                    head, label = j, "pobj"
                    break
            tokens.append(Token(i, text, pos, head, label))
        elif pos == "ADP":
            tokens.append(Token(i, text, pos, root, "prep"))
        elif pos == "ADV":
            tokens.append(Token(i, text, pos, root, "advmod"))
        else:
            if not any(c.isalnum() for c in text):
                label = "punct"
            elif text.lower() in ("a", "an", "the", "this", "that", "these", "those"):
                label = "det"
            else:
                label = "dep"
            head = _next_noun(tags, i) if label == "det" else None
            tokens.append(Token(i, text, pos, root if head is None else head, label))
    return tokens


def spacy_annotator(model: str = "en_core_web_sm"):
    """Return an annotate-compatible callable backed by spaCy.

    Requires the ``spacy`` package and a downloaded model; raises
    ``LinguisticsError`` when unavailable so callers can fall back to the
    rule-based path.
    """
    try:
        import spacy
    except ImportError as exc:
        raise LinguisticsError(f"spaCy not installed: {exc}")
    try:
        nlp = spacy.load(model)
    except OSError as exc:
        raise LinguisticsError(f"spaCy model {model!r} not available: {exc}")

    coarse = {"NOUN": "NN", "PROPN": "PROPN", "NUM": "NUM", "ADJ": "ADJ",
              "VERB": "VERB", "ADV": "ADV", "ADP": "ADP"}

    def _annotate(prompt: str) -> list[Token]:
        doc = nlp(prompt)
        out = []
        for tok in doc:
            pos = coarse.get(tok.pos_, "X")
            head = -1 if tok.head is tok else tok.head.i
            out.append(Token(tok.i, tok.text, pos, head, tok.dep_.lower()))
        return out

    return _annotate
