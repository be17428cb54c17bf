"""Object class vocabulary shared by the scene model, the parser and the generator.

The default list has 31 household classes (the scale of the source dataset)
and is replaceable: scene construction, parsing and generation all accept an
explicit vocabulary.
"""

from __future__ import annotations

DEFAULT_CLASSES: tuple[str, ...] = (
    "apple",
    "banana",
    "bottle",
    "box",
    "can",
    "card",
    "charger",
    "cup",
    "glasses",
    "headset",
    "knife",
    "marker",
    "mobile phone",
    "mouse",
    "notebook",
    "paper",
    "pen",
    "pliers",
    "remote controller",
    "screwdriver",
    "shaver",
    "spoon",
    "stapler",
    "tape",
    "toothbrush",
    "toothpaste",
    "towel",
    "umbrella",
    "wallet",
    "watch",
    "wrench",
)

# nominal bbox (w, h) in pixels used by the synthetic scene generator
CLASS_SIZE_PRIORS: dict[str, tuple[float, float]] = {
    "apple": (70, 66),
    "banana": (120, 50),
    "bottle": (52, 140),
    "box": (150, 110),
    "can": (56, 90),
    "card": (70, 46),
    "charger": (60, 60),
    "cup": (72, 80),
    "glasses": (120, 46),
    "headset": (130, 120),
    "knife": (150, 30),
    "marker": (110, 24),
    "mobile phone": (70, 130),
    "mouse": (58, 90),
    "notebook": (190, 150),
    "paper": (180, 140),
    "pen": (120, 18),
    "pliers": (140, 56),
    "remote controller": (52, 150),
    "screwdriver": (140, 26),
    "shaver": (60, 120),
    "spoon": (120, 30),
    "stapler": (110, 44),
    "tape": (80, 76),
    "toothbrush": (130, 22),
    "toothpaste": (130, 40),
    "towel": (170, 130),
    "umbrella": (220, 60),
    "wallet": (100, 76),
    "watch": (60, 70),
    "wrench": (150, 34),
}

assert len(DEFAULT_CLASSES) == 31
assert set(CLASS_SIZE_PRIORS) == set(DEFAULT_CLASSES)
