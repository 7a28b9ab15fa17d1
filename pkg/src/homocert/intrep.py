"""Integral linear representations with torsion orbit images.

The integral H1 of the cover is quotiented by the (deck-saturated) lattice
spanned by orbit power classes via Smith normal form; the quotient embeds
in GL_d'(Z) (unipotent free block + cyclic permutation torsion blocks) and
induces up to a block-monomial representation of the free group whose
degree is d' * |G|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import linalg
from .cover import CoveringComplex, lift_chain
from .errors import RefutedError, UsageError
from .words import Word, invert, word_to_string


@dataclass
class AbelianQuotient:
    """H1(Z)/span as rank + invariant factors, with an exactly computed
    projection map (the Smith row transform)."""

    h1_dim: int
    rank: int                  # free rank r
    divisors: list             # all nonzero elementary divisors (1s kept)
    torsion: list              # the divisors > 1
    transform: list            # U with U * span_basis * V = diag

    def project(self, coords):
        """Image of an integral H1 vector: (free part, torsion part)."""
        if len(coords) != self.h1_dim:
            raise UsageError("coordinate length mismatch")
        w = linalg.mat_vec(self.transform, [int(c) for c in coords])
        s = len(self.divisors)
        torsion = tuple(w[i] % d for i, d in enumerate(self.divisors) if d > 1)
        free = tuple(w[s:])
        return free, torsion

    @property
    def zero(self):
        return ((0,) * self.rank, (0,) * len(self.torsion))

    def order_of(self, element):
        free, torsion = element
        if any(free):
            return math.inf
        return math.lcm(*[d // math.gcd(d, t) for d, t in zip(self.torsion, torsion)]) \
            if self.torsion else 1

    def exponent_torsion(self):
        return math.lcm(*self.torsion) if self.torsion else 1

    def describe(self):
        return {"rank": self.rank, "torsion": list(self.torsion),
                "h1Dim": self.h1_dim}


def integral_quotient(h1_dim, span_columns) -> AbelianQuotient:
    """Quotient of Z^h1_dim by the lattice spanned by the given columns."""
    lattice = linalg.IntegerLattice(h1_dim)
    for col in span_columns:
        if len(col) != h1_dim:
            raise UsageError("span column has wrong length")
        lattice.add(col)
    basis = lattice.basis
    if not basis:
        return AbelianQuotient(h1_dim, h1_dim, [], [],
                               linalg.identity_matrix(h1_dim))
    mat = [[col[i] for col in basis] for i in range(h1_dim)]
    _, u, v, diag = linalg.smith_normal_form(mat)
    if abs(linalg.det_int(u)) != 1 or abs(linalg.det_int(v)) != 1:
        raise RefutedError("Smith transform is not unimodular")
    divisors = [d for d in diag if d != 0]
    for a, b in zip(divisors, divisors[1:]):
        if b % a:
            raise RefutedError("Smith divisor chain broken")
    return AbelianQuotient(h1_dim, h1_dim - len(divisors), divisors,
                           [d for d in divisors if d > 1], u)


def saturate_span(cover: CoveringComplex, class_coords):
    """Close a span lattice under the deck action.

    The full orbit span is deck-invariant (a conjugate of an orbit word is
    again an orbit word), so every added column is still a legitimate span
    member; without this the quotient would not carry a group structure.
    """
    lattice = linalg.IntegerLattice(cover.h1_dim)
    frontier = [list(map(int, c)) for c in class_coords]
    for col in frontier:
        lattice.add(col)
    while frontier:
        nxt = []
        for col in frontier:
            chain = cover.coords_to_chain(col)
            for g in range(1, cover.N):
                moved = cover.tree_coords(cover.act(g, chain))
                if lattice.add(moved):
                    nxt.append(moved)
        frontier = nxt
    return lattice.basis


@dataclass
class EmbeddedAbelian:
    """Faithful integral matrix model of an AbelianQuotient.

    Z^r sits in degree r+1 as unipotent translations (single shared
    block); each Z/d is a d x d cyclic permutation block; trivial parts
    contribute nothing (degree 1 identity if A itself is trivial).
    """

    quotient: AbelianQuotient
    degree: int

    def embed(self, element):
        free, torsion = element
        r = self.quotient.rank
        blocks = []
        if r > 0:
            block = linalg.identity_matrix(r + 1)
            for j, v in enumerate(free):
                block[0][j + 1] = int(v)
            blocks.append(block)
        for d, t in zip(self.quotient.torsion, torsion):
            block = [[1 if i == (j + t) % d else 0 for j in range(d)]
                     for i in range(d)]
            blocks.append(block)
        if not blocks:
            blocks = [[[1]]]
        return _block_diag(blocks)


def _block_diag(blocks):
    size = sum(len(b) for b in blocks)
    out = [[0] * size for _ in range(size)]
    offset = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                out[offset + i][offset + j] = x
        offset += len(b)
    return out


def embed_abelian(quotient: AbelianQuotient) -> EmbeddedAbelian:
    """Build the block model and verify faithfulness on generators."""
    r = quotient.rank
    degree = (r + 1 if r > 0 else 0) + sum(quotient.torsion)
    degree = max(degree, 1)
    emb = EmbeddedAbelian(quotient, degree)
    gens = []
    for i in range(r):
        free = tuple(1 if j == i else 0 for j in range(r))
        gens.append((free, (0,) * len(quotient.torsion)))
    for i in range(len(quotient.torsion)):
        tors = tuple(1 if j == i else 0 for j in range(len(quotient.torsion)))
        gens.append(((0,) * r, tors))
    seen = set()
    for g in gens:
        m = tuple(map(tuple, emb.embed(g)))
        if m in seen or linalg.is_identity([list(row) for row in m]):
            raise RefutedError("abelian embedding is not faithful on generators")
        seen.add(m)
    # additivity spot-check on generator pairs
    for a in gens:
        for b in gens:
            s = (tuple(x + y for x, y in zip(a[0], b[0])),
                 tuple((x + y) % d for (x, y), d
                       in zip(zip(a[1], b[1]), quotient.torsion)))
            lhs = linalg.int_mat_mul(emb.embed(a), emb.embed(b))
            if not linalg.mat_eq(lhs, emb.embed(s)):
                raise RefutedError("abelian embedding is not additive")
    return emb


@dataclass
class IntegralRep:
    """Block-monomial integral representation of F_n induced from A."""

    cover: CoveringComplex
    quotient: AbelianQuotient
    embedding: EmbeddedAbelian
    section: list              # coset representative words, s(0) empty
    degree: int
    letter_matrices: dict

    def class_of(self, w: Word):
        """A-class of a kernel word (image of its lifted cycle)."""
        chain = lift_chain(self.cover, w)
        return self.quotient.project(self.cover.tree_coords(chain))

    def rho(self, w: Word):
        mat = linalg.identity_matrix(self.degree)
        for letter in w.letters:
            mat = linalg.int_mat_mul(mat, self.letter_matrices[letter])
        return mat

    def to_json(self):
        return {
            "degree": self.degree,
            "quotient": self.quotient.describe(),
            "section": [word_to_string(s) for s in self.section],
            "generators": {str(letter): mat
                           for letter, mat in sorted(self.letter_matrices.items())
                           if letter > 0},
        }


def build_induced_rep(cover: CoveringComplex, quotient: AbelianQuotient,
                      embedding: EmbeddedAbelian | None = None) -> IntegralRep:
    """rho(x): block (g', g) = embed(class(s(g')^-1 x s(g))), g' = pi(x) g.

    The section is the BFS-shortest/lex one from the surjection; s(1) is
    the empty word (checked).  Each generator matrix is block-monomial
    with the permutation pattern of pi(x) acting on G.
    """
    if embedding is None:
        embedding = embed_abelian(quotient)
    section = cover.surjection.section()
    if not section[0].is_identity():
        raise UsageError("section must send the identity to the empty word")
    dprime = embedding.degree
    degree = dprime * cover.N
    letter_matrices = {}
    group = cover.group
    for i in range(1, cover.n + 1):
        for letter in (i, -i):
            gx = cover.surjection.image_of_letter(letter)
            w = Word((letter,), cover.n)
            mat = [[0] * degree for _ in range(degree)]
            for g in range(cover.N):
                gp = group.mult(gx, g)
                inner = invert(section[gp]) * w * section[g]
                if cover.surjection.image_of_word(inner) != 0:
                    raise RefutedError("section word does not close up")
                block = embedding.embed(
                    quotient.project(cover.tree_coords(lift_chain(cover, inner))))
                for r in range(dprime):
                    row = mat[gp * dprime + r]
                    brow = block[r]
                    for c in range(dprime):
                        row[g * dprime + c] = brow[c]
            letter_matrices[letter] = mat
    rep = IntegralRep(cover=cover, quotient=quotient, embedding=embedding,
                      section=section, degree=degree,
                      letter_matrices=letter_matrices)
    for i in range(1, cover.n + 1):
        prod = linalg.int_mat_mul(rep.letter_matrices[i], rep.letter_matrices[-i])
        if not linalg.is_identity(prod):
            raise RefutedError("generator and inverse matrices do not cancel")
    return rep


def witness_pipeline_quotient(cover: CoveringComplex, class_coords):
    """Deck-saturate the span and take the Smith quotient (Theorems-style)."""
    basis = saturate_span(cover, class_coords)
    return integral_quotient(cover.h1_dim, basis)


def verify_finite_orbit_images(rep: IntegralRep, power_classes):
    """Check rho(x) has finite order for each orbit class, exactly.

    Per word: per deck element the conjugated class must be torsion (a
    nonzero free part refutes the build), and the matrix power
    rho(x)^(m * lcm of those torsion orders) must be the identity.
    Returns per-word orders.
    """
    cover = rep.cover
    quotient = rep.quotient
    section = rep.section
    results = []
    exponent = quotient.exponent_torsion()
    for pc in power_classes:
        m = pc.power
        torsion_orders = []
        x_m = pc.word ** m
        for g in range(cover.N):
            inner = invert(section[g]) * x_m * section[g]
            elem = rep.class_of(inner)
            free, _ = elem
            if any(free):
                raise RefutedError(
                    f"orbit word {word_to_string(pc.word)} has non-torsion "
                    f"conjugate class; span saturation is broken")
            torsion_orders.append(quotient.order_of(elem))
        order_bound = m * math.lcm(*torsion_orders)
        if order_bound > m * exponent:
            raise RefutedError("torsion order exceeds the exponent bound")
        power = linalg.int_mat_pow(rep.rho(pc.word), order_bound)
        if not linalg.is_identity(power):
            raise RefutedError(
                f"rho({word_to_string(pc.word)})^{order_bound} != 1")
        results.append({"word": word_to_string(pc.word), "m": m,
                        "orderDividing": order_bound})
    return results


def find_infinite_order_witness(rep: IntegralRep, budget=200):
    """A word with rho of infinite order: fundamental-cycle words whose
    class has a nonzero free part are natural candidates."""
    from .chainrep import order_decision
    cover = rep.cover
    section = rep.section
    candidates = []
    for idx in cover.nontree:
        g, i = cover.edge_of_index(idx)
        h = cover.group.mult(g, cover.surjection.images[i - 1])
        w = section[g] * Word((i,), cover.n) * invert(section[h])
        candidates.append(w)
    checked = 0
    for w in candidates:
        if checked >= budget:
            break
        checked += 1
        free, _ = rep.class_of(w)
        if any(free):
            verdict = order_decision(rep.rho(w))
            if verdict.verdict != "infinite":
                raise RefutedError("free-rank class produced a finite-order matrix")
            return {"word": word_to_string(w), "order": verdict.to_payload(),
                    "checked": checked}
    return None
