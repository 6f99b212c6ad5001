"""A small caption corpus for batch exports and smoke tests."""

CAPTIONS = [
    "A blue car driving through the city.",
    "Two dogs running across a snowy field.",
    "An old fisherman sailing near the rocky coast.",
    "A red kite flying above the quiet harbor.",
    "Three children playing beside a wooden fence.",
    "A golden retriever resting under a large oak.",
    "The ancient tower standing over a foggy valley.",
    "A yellow tram rolling past the busy market.",
    "Bright lanterns glowing along the narrow street.",
    "A small boat drifting toward the distant island.",
    "Horses grazing in a green meadow at dawn.",
    "A rusty bicycle leaning against the brick wall.",
    "Seagulls circling above the crowded pier.",
    "A white owl perched on a dark branch.",
    "The tired hiker walking down a steep trail.",
    "A purple balloon floating over the calm lake.",
    "Fresh bread cooling on the kitchen table.",
    "A black cat sleeping near the warm stove.",
    "Four lanterns hanging from the painted ceiling.",
    "A silver plane climbing into the cloudy sky.",
    "The young painter working inside a sunny studio.",
    "A brown bear fishing in the shallow river.",
    "A ferry crossing toward Elsinore under the grey cliffs.",
    "Pigeons gathering around Trafalgar fountain at noon.",
]
