"""Constrained scene-description language.

Sentences are rendered from (subject, predicate, object) triples through a
fixed template set and parsed back with a lexicon of class names and
predicate phrases. Parsing is case-insensitive, strips punctuation, and uses
longest-match tokenization so multi-word classes ("mobile phone") and
multi-word predicate phrases ("on the left of") win over their prefixes.

UNDER is kept as typed; grounding resolves it through the ON inverse.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Optional

from .scene import Predicate, Scene, collision_free_set
from .vocab import DEFAULT_CLASSES


class Source(str, Enum):
    SELF_EXPLANATION = "SELF_EXPLANATION"
    HUMAN = "HUMAN"


@dataclass(frozen=True)
class RelationTriple:
    subject_class: str
    predicate: Predicate
    object_class: str
    subject_id: Optional[int] = None
    object_id: Optional[int] = None

    def key(self) -> tuple[str, Predicate, str]:
        """Classes and predicate only; ids excluded."""
        return (self.subject_class, self.predicate, self.object_class)


@dataclass(frozen=True)
class Description:
    triple: RelationTriple
    text: str
    source: Source = Source.SELF_EXPLANATION
    # set by the error-injection layer; the pipeline never reads it
    corrupted: bool = False

    def as_human(self) -> "Description":
        return replace(self, source=Source.HUMAN)


class LanguageError(ValueError):
    """Base for description language failures; `code` is machine-readable."""

    code = "language-error"

    def __init__(self, message: str, tokens: tuple[str, ...] = ()):
        super().__init__(message)
        self.tokens = tokens


class UnknownClassError(LanguageError):
    code = "unknown-class"


class UnparseableError(LanguageError):
    code = "no-predicate"


class LexiconError(LanguageError):
    code = "bad-lexicon"


class ArityError(LanguageError):
    code = "class-arity"


TEMPLATES: dict[Predicate, tuple[str, ...]] = {
    Predicate.ON: (
        "{subject} on {object}",
        "{subject} put above {object}",
        "{subject} placed on {object}",
    ),
    Predicate.UNDER: (
        "{subject} placed under {object}",
        "{subject} sitting under {object}",
    ),
    Predicate.LEFT: (
        "{subject} on the left of {object}",
        "{subject} left of {object}",
    ),
    Predicate.RIGHT: (
        "{subject} on the right of {object}",
        "{subject} right of {object}",
    ),
}

STOPWORDS = frozenset({"the", "a", "an", "is", "are", "it", "of", "to", "this", "that", "there"})

_CLASS_TAG = "CLASS"


@dataclass(frozen=True)
class Lexicon:
    """Phrase tables for the parser, loadable from a tab-separated file."""

    class_phrases: Mapping[tuple[str, ...], str]
    predicate_phrases: Mapping[tuple[str, ...], Predicate]

    @property
    def max_phrase_len(self) -> int:
        lengths = [len(p) for p in self.class_phrases]
        lengths += [len(p) for p in self.predicate_phrases]
        return max(lengths, default=1)

    @property
    def classes(self) -> frozenset[str]:
        return frozenset(self.class_phrases.values())

    @staticmethod
    def from_lines(lines: Iterable[str]) -> "Lexicon":
        classes: dict[tuple[str, ...], str] = {}
        predicates: dict[tuple[str, ...], Predicate] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"lexicon line {lineno}: expected `phrase<TAB>TAG`, got {raw!r}")
            phrase, tag = parts[0].strip().lower(), parts[1].strip()
            key = tuple(phrase.split())
            if not key:
                raise LexiconError(f"lexicon line {lineno}: empty phrase")
            if tag == _CLASS_TAG:
                classes[key] = phrase
            else:
                try:
                    predicates[key] = Predicate[tag]
                except KeyError:
                    raise LexiconError(f"lexicon line {lineno}: unknown tag {tag!r}") from None
        return Lexicon(class_phrases=classes, predicate_phrases=predicates)

    @staticmethod
    def load(path: str) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return Lexicon.from_lines(fh)


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    data = resources.files("graspwise").joinpath("data/lexicon.tsv").read_text("utf-8")
    return Lexicon.from_lines(data.splitlines())


def generate(
    triple: RelationTriple,
    template_seed: int = 0,
    vocabulary: Optional[Iterable[str]] = None,
) -> Description:
    """Render a triple into a sentence; the seed picks among the templates."""
    vocab = frozenset(DEFAULT_CLASSES if vocabulary is None else vocabulary)
    for cls in (triple.subject_class, triple.object_class):
        if cls not in vocab:
            raise UnknownClassError(f"class {cls!r} not in vocabulary", tokens=(cls,))
    options = TEMPLATES[triple.predicate]
    text = options[template_seed % len(options)].format(
        subject=triple.subject_class, object=triple.object_class
    )
    return Description(triple=triple, text=text, source=Source.SELF_EXPLANATION)


@dataclass(frozen=True)
class ParseReport:
    triple: RelationTriple
    warnings: tuple[str, ...]


def _tokenize(text: str) -> list[str]:
    return re.sub(r"[^a-z0-9]+", " ", text.lower()).split()


def parse_report(text: str, lexicon: Optional[Lexicon] = None) -> ParseReport:
    """Parse a sentence into a triple, collecting non-fatal warnings.

    Raises UnparseableError when no predicate phrase is present and
    ArityError unless exactly two class mentions are found.
    """
    lex = default_lexicon() if lexicon is None else lexicon
    tokens = _tokenize(text)
    classes: list[str] = []
    predicates: list[Predicate] = []
    unknown: list[str] = []
    warnings: list[str] = []

    i = 0
    while i < len(tokens):
        matched = 0
        for n in range(min(lex.max_phrase_len, len(tokens) - i), 0, -1):
            key = tuple(tokens[i : i + n])
            if key in lex.class_phrases:
                classes.append(lex.class_phrases[key])
                matched = n
                break
            if key in lex.predicate_phrases:
                predicates.append(lex.predicate_phrases[key])
                matched = n
                break
        if matched:
            i += matched
        else:
            if tokens[i] not in STOPWORDS:
                unknown.append(tokens[i])
            i += 1

    for tok in unknown:
        warnings.append(f"unknown token {tok!r}")
    if not predicates:
        raise UnparseableError(
            f"no relation phrase found in {text!r}", tokens=tuple(unknown) or tuple(tokens)
        )
    if len(predicates) > 1:
        warnings.append("multiple relation phrases; using the first")
    if len(classes) != 2:
        raise ArityError(
            f"expected exactly 2 object class mentions, found {len(classes)} in {text!r}",
            tokens=tuple(classes),
        )
    triple = RelationTriple(
        subject_class=classes[0], predicate=predicates[0], object_class=classes[1]
    )
    return ParseReport(triple=triple, warnings=tuple(warnings))


def parse(text: str, lexicon: Optional[Lexicon] = None) -> RelationTriple:
    return parse_report(text, lexicon).triple


def sample_pairs(scene: Scene, seed: int, count: int) -> list[RelationTriple]:
    """Sample canonical relation triples from the scene graph, stacking first."""
    rng = random.Random(seed)
    by_id = scene.by_id

    def to_triple(s: int, p: Predicate, o: int) -> RelationTriple:
        return RelationTriple(
            subject_class=by_id[s].class_name,
            predicate=p,
            object_class=by_id[o].class_name,
            subject_id=s,
            object_id=o,
        )

    stacked = sorted((s, o) for s, p, o in scene.graph.relations if p is Predicate.ON)
    horizontal = sorted((s, o) for s, p, o in scene.graph.relations if p is Predicate.LEFT)
    on_triples = [to_triple(s, Predicate.ON, o) for s, o in stacked]
    left_triples = [to_triple(s, Predicate.LEFT, o) for s, o in horizontal]
    rng.shuffle(on_triples)
    rng.shuffle(left_triples)
    return (on_triples + left_triples)[:count]


def describe_scene(scene: Scene, seed: int) -> Description:
    """Oracle self-explanation: a true sentence whose subject is the grasp target.

    The target is the lowest-id object with nothing stacked on it. Stacking
    relations are preferred; among equals the choice and template vary with
    the seed but stay deterministic.
    """
    free = collision_free_set(scene)
    if not free:
        raise LanguageError("scene has no collision-free object to describe")
    target = min(free)
    rng = random.Random(seed)

    candidates = [
        (s, p, o)
        for s, p, o in scene.graph.relations_of(target)
        if s == target and p is not Predicate.UNDER
    ]
    on_only = [c for c in candidates if c[1] is Predicate.ON]
    pool = sorted(on_only or candidates, key=lambda c: (c[1].value, c[2]))
    if not pool:
        raise LanguageError(f"object {target} has no unambiguous relation to describe")
    s, p, o = pool[rng.randrange(len(pool))]
    triple = RelationTriple(
        subject_class=scene.object(s).class_name,
        predicate=p,
        object_class=scene.object(o).class_name,
        subject_id=s,
        object_id=o,
    )
    scene_vocab = {obj.class_name for obj in scene.objects}
    return generate(triple, template_seed=rng.randrange(1 << 16), vocabulary=scene_vocab)
