"""Free group words, elementary Nielsen moves, and orbit enumeration.

Words are tuples of nonzero signed generator indices (index i in 1..rank,
negative = inverse), always freely reduced.  The string form uses a..z for
generators and A..Z for inverses, so "abAB" is x1 x2 x1^-1 x2^-1.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from sympy import isprime

from .errors import CapExceeded, UsageError

_LOWER = "abcdefghijklmnopqrstuvwxyz"


def reduce_letters(letters, rank):
    """Freely reduce a letter sequence; validates index range."""
    out = []
    for letter in letters:
        if letter == 0 or abs(letter) > rank:
            raise UsageError(f"generator index {letter} out of range for rank {rank}")
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word in the rank-n free group."""

    letters: tuple[int, ...]
    rank: int

    def __post_init__(self):
        for a, b in zip(self.letters, self.letters[1:]):
            if a == -b:
                raise UsageError("word is not freely reduced; use reduce()")

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return word_to_string(self)

    def __mul__(self, other):
        return multiply(self, other)

    def __invert__(self):
        return invert(self)

    def __pow__(self, k):
        if k < 0:
            return invert(self) ** (-k)
        result = Word((), self.rank)
        for _ in range(k):
            result = multiply(result, self)
        return result

    def is_identity(self):
        return not self.letters


def reduce(letters, rank):
    """Build a Word from a raw signed-index sequence (freely reducing)."""
    return Word(reduce_letters(letters, rank), rank)


def identity_word(rank):
    return Word((), rank)


def generator(i, rank):
    return Word((i,), rank)


def multiply(a: Word, b: Word) -> Word:
    if a.rank != b.rank:
        raise UsageError("rank mismatch")
    return Word(reduce_letters(a.letters + b.letters, a.rank), a.rank)


def invert(a: Word) -> Word:
    return Word(tuple(-x for x in reversed(a.letters)), a.rank)


def commutator(a: Word, b: Word) -> Word:
    return multiply(multiply(a, b), multiply(invert(a), invert(b)))


def word_to_string(w: Word) -> str:
    if w.rank > 26:
        raise UsageError("string form only supports rank <= 26")
    return "".join(_LOWER[x - 1] if x > 0 else _LOWER[-x - 1].upper()
                   for x in w.letters)


def word_from_string(s: str, rank: int) -> Word:
    letters = []
    for ch in s:
        if ch.islower():
            letters.append(_LOWER.index(ch) + 1)
        elif ch.isupper():
            letters.append(-(_LOWER.index(ch.lower()) + 1))
        else:
            raise UsageError(f"bad word character {ch!r}")
    return reduce(letters, rank)


# ---------------------------------------------------------------------------
# Nielsen moves.  Kinds:
#   L  (i, j): x_i -> x_j x_i          Li (i, j): x_i -> x_j^-1 x_i
#   R  (i, j): x_i -> x_i x_j          Ri (i, j): x_i -> x_i x_j^-1
#   I  (i, _): x_i -> x_i^-1
#   S  (i, j): x_i <-> x_j
# L/Li and R/Ri are mutually inverse; I and S are involutions.  Right
# transvections are derived moves (Ri(i,j) = I(i) L(i,j) I(i) as maps) but
# are carried as single moves so factorizations stay short.

_INVERSE_KIND = {"L": "Li", "Li": "L", "R": "Ri", "Ri": "R", "I": "I", "S": "S"}


def _move_letter(move, letter):
    kind, i, j = move
    a = abs(letter)
    if kind == "I":
        return (-letter,) if a == i else (letter,)
    if kind == "S":
        if a == i:
            return (j if letter > 0 else -j,)
        if a == j:
            return (i if letter > 0 else -i,)
        return (letter,)
    if a != i:
        return (letter,)
    if kind == "L":
        return (j, i) if letter > 0 else (-i, -j)
    if kind == "Li":
        return (-j, i) if letter > 0 else (-i, j)
    if kind == "R":
        return (i, j) if letter > 0 else (-j, -i)
    if kind == "Ri":
        return (i, -j) if letter > 0 else (j, -i)
    raise UsageError(f"unknown move kind {kind}")


def _validate_move(move, rank):
    kind, i, j = move
    if kind not in _INVERSE_KIND:
        raise UsageError(f"unknown move kind {kind}")
    if not 1 <= i <= rank:
        raise UsageError("move index out of range")
    if kind not in ("I",) and (not 1 <= j <= rank or i == j):
        raise UsageError("move indices out of range or equal")


@dataclass(frozen=True)
class NielsenAuto:
    """An automorphism of F_n stored as a factorization into elementary moves.

    Moves apply to a word in sequence order (moves[0] first), so the
    composite map is moves[-1] o ... o moves[0].  Invertibility is free:
    the inverse factorization is the reversed sequence of inverse moves.
    """

    rank: int
    moves: tuple[tuple, ...]

    def __post_init__(self):
        for move in self.moves:
            _validate_move(move, self.rank)

    def inverse(self) -> "NielsenAuto":
        inv = tuple((_INVERSE_KIND[k], i, j) for (k, i, j) in reversed(self.moves))
        return NielsenAuto(self.rank, inv)

    def compose(self, other: "NielsenAuto") -> "NielsenAuto":
        """self o other (other applied first)."""
        if self.rank != other.rank:
            raise UsageError("rank mismatch")
        return NielsenAuto(self.rank, other.moves + self.moves)

    def generator_images(self) -> list[Word]:
        return [apply_auto(self, generator(i, self.rank))
                for i in range(1, self.rank + 1)]


def identity_auto(rank):
    return NielsenAuto(rank, ())


def transvection(rank, i, j, power=1):
    """x_i -> x_j^power x_i as a NielsenAuto (power may be negative)."""
    kind = "L" if power >= 0 else "Li"
    return NielsenAuto(rank, ((kind, i, j),) * abs(power))


def right_transvection(rank, i, j, power=1):
    kind = "R" if power >= 0 else "Ri"
    return NielsenAuto(rank, ((kind, i, j),) * abs(power))


def inversion(rank, i):
    return NielsenAuto(rank, (("I", i, 0),))


def swap(rank, i, j):
    return NielsenAuto(rank, (("S", i, j),))


def conjugation_by_word(w: Word) -> NielsenAuto:
    """The inner automorphism x -> w x w^-1 as a Nielsen factorization."""
    rank = w.rank
    auto = identity_auto(rank)
    for letter in w.letters:
        j = abs(letter)
        moves = tuple(("L", i, j) for i in range(1, rank + 1) if i != j) \
            + tuple(("Ri", i, j) for i in range(1, rank + 1) if i != j)
        conj = NielsenAuto(rank, moves)
        if letter < 0:
            conj = conj.inverse()
        auto = auto.compose(conj)   # conj_{uv} = conj_u o conj_v
    return auto


def apply_auto(auto: NielsenAuto, w: Word) -> Word:
    if auto.rank != w.rank:
        raise UsageError("rank mismatch")
    letters = w.letters
    for move in auto.moves:
        out = []
        for letter in letters:
            for x in _move_letter(move, letter):
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
        letters = tuple(out)
    return Word(letters, w.rank)


# ---------------------------------------------------------------------------
# abelianization

def abelianize_mod_p(w: Word, p: int):
    """Exponent-sum vector of w reduced mod p."""
    if not isprime(p):
        raise UsageError(f"{p} is not prime")
    v = [0] * w.rank
    for letter in w.letters:
        v[abs(letter) - 1] += 1 if letter > 0 else -1
    return tuple(x % p for x in v)


def is_p_primitive(w: Word, p: int) -> bool:
    """True iff w has nonzero image in the mod-p abelianization."""
    return any(x != 0 for x in abelianize_mod_p(w, p))


# ---------------------------------------------------------------------------
# orbit enumeration

@dataclass(frozen=True)
class OrbitSpec:
    """A set of words given as an automorphism-orbit ball or a length ball.

    mode is one of "primitives", "p-primitives", "custom".  For
    "p-primitives" the field p must be set and the ball is all reduced
    words of length <= radius with nonzero mod-p image.  For "custom" the
    seeds are required (identity excluded); "primitives" seeds itself
    with x1.  `exact` marks a custom set as exactly the words of interest
    (affects certificate verdict downgrading, not enumeration).
    """

    seeds: tuple[Word, ...]
    radius: int
    mode: str = "custom"
    p: int | None = None
    exact: bool = False

    def __post_init__(self):
        if self.mode not in ("primitives", "p-primitives", "custom"):
            raise UsageError(f"unknown orbit mode {self.mode}")
        if self.mode == "p-primitives" and (self.p is None or not isprime(self.p)):
            raise UsageError("p-primitives mode needs a prime p")
        if self.mode == "custom":
            if not self.seeds:
                raise UsageError("custom orbit needs nonempty seeds")
            if any(s.is_identity() for s in self.seeds):
                raise UsageError("identity word is excluded from orbit seeds")
        if self.radius < 0:
            raise UsageError("radius must be nonnegative")

    def describe(self):
        d = {"mode": self.mode, "radius": self.radius}
        if self.p is not None:
            d["p"] = self.p
        if self.mode == "custom":
            d["seeds"] = [word_to_string(s) for s in self.seeds]
        return d


def elementary_moves(rank):
    """The symmetric elementary move set used for orbit balls."""
    moves = []
    for i in range(1, rank + 1):
        moves.append(("I", i, 0))
        for j in range(1, rank + 1):
            if i == j:
                continue
            moves.extend([("L", i, j), ("Li", i, j), ("R", i, j), ("Ri", i, j)])
            if i < j:
                moves.append(("S", i, j))
    return moves


def reduced_words_up_to(rank, max_len):
    """All freely reduced words of length <= max_len (identity included)."""
    out = [identity_word(rank)]
    frontier = [()]
    letters = [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)]
    for _ in range(max_len):
        nxt = []
        for tup in frontier:
            for letter in letters:
                if tup and tup[-1] == -letter:
                    continue
                nxt.append(tup + (letter,))
        out.extend(Word(t, rank) for t in nxt)
        frontier = nxt
    return out


def enumerate_orbit_ball(spec: OrbitSpec, rank: int, *,
                         max_radius: int = 12, max_words: int = 1_000_000):
    """The word set described by `spec` (see OrbitSpec).

    For custom/primitives modes this is all images of the seeds under
    products of at most `radius` elementary moves, deduplicated as reduced
    words.  Hard caps guard the radius and the result size.
    """
    if spec.radius > max_radius:
        raise CapExceeded(f"orbit radius {spec.radius} exceeds cap {max_radius}")
    if spec.mode == "p-primitives":
        result = {w for w in reduced_words_up_to(rank, spec.radius)
                  if not w.is_identity() and is_p_primitive(w, spec.p)}
        if len(result) > max_words:
            raise CapExceeded(f"orbit ball size exceeds cap {max_words}")
        return result
    seeds = spec.seeds if spec.mode == "custom" else (generator(1, rank),)
    for s in seeds:
        if s.rank != rank:
            raise UsageError("seed rank mismatch")
    moves = elementary_moves(rank)
    current = set(seeds)
    result = set(seeds)
    for _ in range(spec.radius):
        nxt = set()
        for w in current:
            for move in moves:
                img = apply_auto(NielsenAuto(rank, (move,)), w)
                if img not in result:
                    nxt.add(img)
        result |= nxt
        if len(result) > max_words:
            raise CapExceeded(f"orbit ball size exceeds cap {max_words}")
        current = nxt
        if not current:
            break
    return result


def random_reduced_word(rng, rank, length):
    """A uniformly chosen freely reduced word of exactly `length` letters."""
    letters = []
    for _ in range(length):
        options = [l for i in range(1, rank + 1) for l in (i, -i)
                   if not letters or letters[-1] != -l]
        letters.append(rng.choice(options))
    return Word(tuple(letters), rank)


def random_nielsen_auto(rng, rank, num_moves):
    """A random Nielsen factorization (used for shifted-basis tests)."""
    moves = []
    kinds = ["L", "Li", "R", "Ri", "I", "S"]
    for _ in range(num_moves):
        kind = rng.choice(kinds)
        i = rng.randrange(1, rank + 1)
        if kind == "I":
            moves.append(("I", i, 0))
        else:
            j = rng.choice([x for x in range(1, rank + 1) if x != i])
            moves.append((kind, i, j))
    return NielsenAuto(rank, tuple(moves))
