"""Finitely presented groups: words, presentations, morphisms and a text format.

Words are tuples of ``(generator, exponent)`` letters with exponent in {+1, -1}
and are kept freely reduced.  The text format is line oriented::

    group Gamma
    gens a b c
    rel a c a^-1 c^-1
    rel b^2
    rel a b a b
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

Letter = tuple[str, int]

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
_TOKEN = re.compile(r"([A-Za-z][A-Za-z0-9_]*)(?:\^([+-]?\d+))?\Z")


class PresentationError(ValueError):
    """Raised for malformed presentations, words or morphisms."""


class PresentationSyntaxError(PresentationError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def is_identifier(name: str) -> bool:
    return bool(_IDENT.match(name))


def _reduce(letters: Iterable[Letter]) -> tuple[Letter, ...]:
    stack: list[Letter] = []
    for gen, exp in letters:
        if exp not in (1, -1):
            raise PresentationError(f"letter exponent must be +1 or -1, got {exp!r}")
        if stack and stack[-1][0] == gen and stack[-1][1] == -exp:
            stack.pop()
        else:
            stack.append((gen, exp))
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """A freely reduced word in generator letters.  The empty word is the identity."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def of(cls, *tokens: str) -> "Word":
        """Build a word from tokens like ``"a"``, ``"b^-1"``, ``"c^3"``."""
        letters: list[Letter] = []
        for tok in tokens:
            letters.extend(_expand_token(tok))
        return cls(tuple(letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __pow__(self, k: int) -> "Word":
        if k < 0:
            return invert_word(self) ** (-k)
        return Word(self.letters * k)

    def inverse(self) -> "Word":
        return invert_word(self)

    def generators(self) -> set[str]:
        return {g for g, _ in self.letters}

    def __str__(self) -> str:
        return format_word(self) or "1"


def free_reduce(letters: Iterable[Letter]) -> Word:
    return Word(tuple(letters))


def invert_word(w: Word) -> Word:
    return Word(tuple((g, -e) for g, e in reversed(w.letters)))


def format_word(w: Word) -> str:
    """Compact rendering with runs collapsed, e.g. ``a^2 b^-1``."""
    parts = []
    i = 0
    letters = w.letters
    while i < len(letters):
        j = i
        while j < len(letters) and letters[j] == letters[i]:
            j += 1
        gen, exp = letters[i]
        power = exp * (j - i)
        parts.append(gen if power == 1 else f"{gen}^{power}")
        i = j
    return " ".join(parts)


def _expand_token(tok: str) -> list[Letter]:
    m = _TOKEN.match(tok)
    if not m:
        raise PresentationError(f"bad letter {tok!r}")
    gen, power = m.group(1), m.group(2)
    k = 1 if power is None else int(power)
    if k == 0:
        raise PresentationError(f"zero exponent in {tok!r}")
    sign = 1 if k > 0 else -1
    return [(gen, sign)] * abs(k)


@dataclass(frozen=True)
class GroupPresentation:
    name: str
    generators: tuple[str, ...]
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "relators", tuple(self.relators))
        seen = set()
        for g in self.generators:
            if not is_identifier(g):
                raise PresentationError(f"invalid generator name {g!r}")
            if g in seen:
                raise PresentationError(f"duplicate generator {g!r}")
            seen.add(g)
        for j, r in enumerate(self.relators):
            if len(r) == 0:
                raise PresentationError(f"relator {j} is empty after free reduction")
            unknown = r.generators() - seen
            if unknown:
                raise PresentationError(
                    f"relator {j} uses undeclared generator(s) {sorted(unknown)}"
                )

    @property
    def rank(self) -> int:
        return len(self.generators)

    def to_text(self) -> str:
        return serialize_presentation(self)

    def __str__(self) -> str:
        rels = ", ".join(format_word(r) for r in self.relators)
        return f"<{' '.join(self.generators)} | {rels}>"


def serialize_presentation(p: GroupPresentation) -> str:
    lines = [f"group {p.name}", "gens " + " ".join(p.generators)]
    for r in p.relators:
        lines.append("rel " + " ".join(g if e == 1 else f"{g}^-1" for g, e in r.letters))
    return "\n".join(lines) + "\n"


def parse_presentation(text: str) -> GroupPresentation:
    """Parse the line-oriented presentation format.

    Errors carry the 1-based line and column of the offending token.
    """
    name = None
    gens: list[str] | None = None
    relators: list[Word] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        col0 = len(raw) - len(raw.lstrip()) + 1
        tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", raw)]
        keyword = tokens[0][0]
        args = tokens[1:]

        if name is None:
            if keyword != "group":
                raise PresentationSyntaxError("expected 'group <name>'", lineno, col0)
            if len(args) != 1:
                raise PresentationSyntaxError("'group' takes exactly one name", lineno, col0)
            name = args[0][0]
            continue
        if gens is None:
            if keyword != "gens":
                raise PresentationSyntaxError("expected 'gens <id> ...'", lineno, col0)
            gens = []
            for tok, col in args:
                if not is_identifier(tok):
                    raise PresentationSyntaxError(f"invalid generator name {tok!r}", lineno, col)
                if tok in gens:
                    raise PresentationSyntaxError(f"duplicate generator {tok!r}", lineno, col)
                gens.append(tok)
            continue
        if keyword != "rel":
            raise PresentationSyntaxError(f"unexpected keyword {keyword!r}", lineno, col0)
        if not args:
            raise PresentationSyntaxError("empty relator", lineno, col0)
        letters: list[Letter] = []
        for tok, col in args:
            try:
                expanded = _expand_token(tok)
            except PresentationError as exc:
                raise PresentationSyntaxError(str(exc), lineno, col) from None
            if expanded[0][0] not in gens:
                raise PresentationSyntaxError(
                    f"undeclared generator {expanded[0][0]!r}", lineno, col
                )
            letters.extend(expanded)
        word = Word(tuple(letters))
        if len(word) == 0:
            raise PresentationSyntaxError("relator is empty after free reduction", lineno, col0)
        relators.append(word)

    if name is None:
        raise PresentationSyntaxError("missing 'group' line", 1, 1)
    if gens is None:
        raise PresentationSyntaxError("missing 'gens' line", 1, 1)
    return GroupPresentation(name, tuple(gens), tuple(relators))


def commutator_word(x: str, y: str) -> Word:
    return Word(((x, 1), (y, 1), (x, -1), (y, -1)))


def surface_group(genus: int) -> GroupPresentation:
    if genus < 1:
        raise PresentationError(f"surface genus must be >= 1, got {genus}")
    gens = []
    rel = Word()
    for i in range(1, genus + 1):
        a, b = f"a{i}", f"b{i}"
        gens += [a, b]
        rel = rel * commutator_word(a, b)
    return GroupPresentation(f"surface{genus}", tuple(gens), (rel,))


def gamma_no_aga() -> GroupPresentation:
    return GroupPresentation(
        "Gamma",
        ("a", "b", "c"),
        (commutator_word("a", "c"), Word.of("b^2"), Word.of("a", "b", "a", "b")),
    )


def h_infinite_dihedral() -> GroupPresentation:
    return GroupPresentation("H", ("a", "b"), (Word.of("b^2"), Word.of("a", "b", "a", "b")))


def free_abelian(k: int) -> GroupPresentation:
    if k < 1:
        raise PresentationError(f"rank must be >= 1, got {k}")
    gens = tuple(f"x{i}" for i in range(1, k + 1))
    rels = tuple(commutator_word(gens[i], gens[j]) for i in range(k) for j in range(i + 1, k))
    return GroupPresentation(f"Z{k}", gens, rels)


def free_group(k: int) -> GroupPresentation:
    if k < 1:
        raise PresentationError(f"rank must be >= 1, got {k}")
    return GroupPresentation(f"F{k}", tuple(f"x{i}" for i in range(1, k + 1)), ())


BUILTINS = {
    "surface": surface_group,
    "gamma_no_aga": gamma_no_aga,
    "h_infinite_dihedral": h_infinite_dihedral,
    "free_abelian": free_abelian,
    "free": free_group,
}
_PARAMETRIZED = {"surface", "free_abelian", "free"}


def builtin_presentation(key: str, parameter: int | None = None) -> GroupPresentation:
    if key not in BUILTINS:
        raise PresentationError(f"unknown builtin {key!r}; choose from {sorted(BUILTINS)}")
    if key in _PARAMETRIZED:
        if parameter is None:
            raise PresentationError(f"builtin {key!r} needs a positive integer parameter")
        return BUILTINS[key](int(parameter))
    if parameter is not None:
        raise PresentationError(f"builtin {key!r} takes no parameter")
    return BUILTINS[key]()


@dataclass(frozen=True)
class PresentationMorphism:
    """Assignment of a word over ``source`` generators to each ``target`` generator."""

    source: GroupPresentation
    target: GroupPresentation
    images: Mapping[str, Word] = field(default_factory=dict)

    def __post_init__(self):
        images = dict(self.images)
        missing = set(self.target.generators) - set(images)
        extra = set(images) - set(self.target.generators)
        if missing or extra:
            raise PresentationError(
                f"morphism images must cover target generators exactly "
                f"(missing {sorted(missing)}, extra {sorted(extra)})"
            )
        src = set(self.source.generators)
        for h, w in images.items():
            if not w.generators() <= src:
                raise PresentationError(f"image of {h!r} uses non-source generators")
        object.__setattr__(self, "images", images)

    def apply(self, w: Word) -> Word:
        """Substitute image words for the (target) letters of ``w``."""
        out: list[Letter] = []
        for g, e in w.letters:
            img = self.images[g]
            out.extend(img.letters if e == 1 else invert_word(img).letters)
        return Word(tuple(out))

    def then(self, other: "PresentationMorphism") -> "PresentationMorphism":
        """Composite morphism: first ``self`` (source -> target), then ``other``.

        Representations push forward along ``self`` and then along ``other``.
        """
        if other.source != self.target:
            raise PresentationError("morphisms are not composable")
        return PresentationMorphism(
            self.source,
            other.target,
            {h: self.apply(w) for h, w in other.images.items()},
        )


def identity_morphism(p: GroupPresentation) -> PresentationMorphism:
    return PresentationMorphism(p, p, {g: Word(((g, 1),)) for g in p.generators})


@dataclass(frozen=True)
class ConsequenceFactor:
    """One factor ``a^-1 r_j^sign a`` of a relator written as a product of conjugates."""

    conjugator: Word
    relator_index: int
    sign: int = 1


def expand_consequence(p: GroupPresentation, factors: Iterable[ConsequenceFactor]) -> Word:
    """Freely reduce a product of conjugated relators of ``p``.

    Decompositions are supplied by the caller; they are never searched for.
    """
    out = Word()
    for f in factors:
        if f.sign not in (1, -1):
            raise PresentationError("factor sign must be +1 or -1")
        r = p.relators[f.relator_index] ** f.sign
        out = out * invert_word(f.conjugator) * r * f.conjugator
    return out
