"""The chain representation of cover-preserving automorphisms.

An automorphism phi acting trivially on the deck group acts on the 1-chains
of the cover by sending the edge (g, i) to g * lift(phi(x_i)); the entries
of the resulting n x n matrix over Z[G] are Fox derivatives.  Restricting
to the projector image inside H1 gives exact rational matrices whose orders
are decided via minimal polynomials and cyclotomic recognition.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from sympy import Poly, Symbol, cyclotomic_poly, factor_list, totient

from . import linalg
from .cover import CoveringComplex, lift_chain
from .errors import RefutedError, UsageError
from .words import (NielsenAuto, Word, apply_auto, conjugation_by_word,
                    generator)

_X = Symbol("x")


# ---------------------------------------------------------------------------
# Fox matrices over the group ring

@dataclass
class GroupRingMatrix:
    """n x n matrix with Z[G] entries (each a dict element-id -> int)."""

    size: int
    entries: list   # entries[i][j]: dict

    def expand(self, cover: CoveringComplex):
        """The (n|G|) x (n|G|) integer matrix acting on C1 coordinates."""
        dim = cover.c1_dim
        cols = [[0] * dim for _ in range(dim)]
        for i in range(1, cover.n + 1):
            for g in range(cover.N):
                col = cols[cover.c1_index(g, i)]
                for j in range(1, cover.n + 1):
                    for h, c in self.entries[i - 1][j - 1].items():
                        col[cover.c1_index(cover.group.mult(g, h), j)] += c
        return linalg.transpose(cols)

    def ring_mul(self, other, group):
        """Matrix product with group-ring coefficient convolution."""
        n = self.size
        out = [[dict() for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for k in range(n):
                acc = out[i][k]
                for j in range(n):
                    for g, c in self.entries[i][j].items():
                        for h, d in other.entries[j][k].items():
                            key = group.mult(g, h)
                            v = acc.get(key, 0) + c * d
                            if v:
                                acc[key] = v
                            else:
                                acc.pop(key, None)
        return GroupRingMatrix(n, out)

    def relabel(self, mapping):
        """Apply a group automorphism to every coefficient index."""
        out = [[{mapping[g]: c for g, c in entry.items()} for entry in row]
               for row in self.entries]
        return GroupRingMatrix(self.size, out)


def fox_matrix(cover: CoveringComplex, auto: NielsenAuto) -> GroupRingMatrix:
    """Entry (i, j) is the lift-chain coefficient of edge type j in
    lift(phi(x_i)): the image of the Fox derivative d phi(x_i) / d x_j."""
    n = cover.n
    entries = [[dict() for _ in range(n)] for _ in range(n)]
    for i in range(1, n + 1):
        image = apply_auto(auto, generator(i, n))
        for idx, c in lift_chain(cover, image).items():
            g, j = cover.edge_of_index(idx)
            entries[i - 1][j - 1][g] = c
    return GroupRingMatrix(n, entries)


def expand_fox(cover: CoveringComplex, auto: NielsenAuto):
    """Integer matrix of the chain action of `auto` on C1 coordinates."""
    lifts = [lift_chain(cover, apply_auto(auto, generator(i, cover.n)))
             for i in range(1, cover.n + 1)]
    dim = cover.c1_dim
    cols = [None] * dim
    for i in range(1, cover.n + 1):
        for g in range(cover.N):
            moved = cover.act(g, lifts[i - 1])
            col = [0] * dim
            for idx, c in moved.items():
                col[idx] = c
            cols[cover.c1_index(g, i)] = col
    return linalg.transpose(cols)


def chain_action_dense(cover: CoveringComplex, auto: NielsenAuto, vectors):
    """Images of dense C1 vectors under the chain action of `auto`."""
    lifts = [lift_chain(cover, apply_auto(auto, generator(i, cover.n)))
             for i in range(1, cover.n + 1)]
    out = []
    for vec in vectors:
        image = [Fraction(0)] * cover.c1_dim
        for idx, v in enumerate(vec):
            if v == 0:
                continue
            g, i = cover.edge_of_index(idx)
            for e, c in cover.act(g, lifts[i - 1]).items():
                image[e] += v * c
        out.append(image)
    return out


def is_aut_r(cover: CoveringComplex, auto: NielsenAuto) -> bool:
    """True iff the automorphism fixes every generator image in G."""
    surj = cover.surjection
    return all(surj.image_of_word(apply_auto(auto, generator(i, cover.n)))
               == surj.images[i - 1]
               for i in range(1, cover.n + 1))


def induced_endomorphism(cover: CoveringComplex, auto: NielsenAuto):
    """The automorphism of G induced by `auto` when the kernel is preserved.

    Computed on section words and verified multiplicative and bijective;
    returns the mapping as a list, or None when no such automorphism exists
    (then `auto` does not preserve the kernel).
    """
    surj = cover.surjection
    section = surj.section()
    mapping = [surj.image_of_word(apply_auto(auto, section[g]))
               for g in range(cover.N)]
    if sorted(mapping) != list(range(cover.N)):
        return None
    for a in range(cover.N):
        for b in range(cover.N):
            if mapping[cover.group.mult(a, b)] \
                    != cover.group.mult(mapping[a], mapping[b]):
                return None
    return mapping


def action_on_h1(cover: CoveringComplex, auto: NielsenAuto):
    """Matrix of the chain action restricted to H1, in the tree basis."""
    basis = [cover.to_dense(z) for z in cover.cycles]
    images = chain_action_dense(cover, auto, basis)
    cols = []
    for image in images:
        chain = {i: x for i, x in enumerate(image) if x}
        cols.append(cover.tree_coords(chain))
    return linalg.transpose(cols)


def project_to_w(cover: CoveringComplex, projector, auto: NielsenAuto):
    """Matrix of the chain action restricted to image(e) intersect H1.

    Gate: `auto` must act trivially on the deck group (is_aut_r), else the
    action does not commute with the projector and the restriction is
    meaningless.
    """
    if not is_aut_r(cover, auto):
        raise UsageError("automorphism does not act trivially on the deck group")
    basis = projector.w_basis()
    solver = projector.w_solver()
    images = chain_action_dense(cover, auto, basis)
    return linalg.transpose([solver.coords(img) for img in images])


# ---------------------------------------------------------------------------
# exact order decision

@dataclass
class OrderVerdict:
    verdict: str          # "finite" | "infinite"
    order: int | None
    min_poly: list        # ascending coefficients, as strings for JSON
    factors: list         # {poly, multiplicity, cyclotomic_index}

    def to_payload(self):
        return {"verdict": self.verdict, "order": self.order,
                "minPoly": self.min_poly, "minPolyFactors": self.factors}


def _poly_from_coeffs(coeffs):
    return Poly(list(reversed([Fraction(c) for c in coeffs])), _X, domain="QQ")


def cyclotomic_index(poly: Poly):
    """m with poly = Phi_m, or None.  Candidates satisfy totient(m) = degree
    and m <= 2 degree^2 (since totient(m) >= sqrt(m/2))."""
    monic = poly.monic()
    if any(c.q != 1 for c in monic.all_coeffs()):
        return None
    degree = monic.degree()
    for m in range(1, 2 * degree * degree + 2):
        if totient(m) == degree and monic == Poly(cyclotomic_poly(m, _X), _X, domain="QQ"):
            return m
    return None


def order_decision(matrix) -> OrderVerdict:
    """Exact finite/infinite order of an invertible matrix over Q.

    Finite iff the minimal polynomial is squarefree with every irreducible
    factor cyclotomic; the order (lcm of the cyclotomic indices) is
    re-verified by an exact power computation.
    """
    coeffs = linalg.minimal_polynomial(matrix)
    if coeffs[0] == 0:
        raise UsageError("matrix is not invertible (zero constant term)")
    poly = _poly_from_coeffs(coeffs)
    _, factors = factor_list(poly)
    report = []
    squarefree = True
    indices = []
    for fac, mult in factors:
        fac = Poly(fac, _X, domain="QQ")
        idx = cyclotomic_index(fac)
        report.append({"poly": [str(c) for c in reversed(fac.monic().all_coeffs())],
                       "multiplicity": int(mult),
                       "cyclotomicIndex": idx})
        if mult > 1:
            squarefree = False
        indices.append(idx)
    min_poly_str = [str(c) for c in coeffs]
    if squarefree and all(idx is not None for idx in indices):
        order = math.lcm(*indices)
        if not linalg.is_identity(linalg.mat_pow(matrix, order)):
            raise RefutedError("cyclotomic order failed the power re-check")
        return OrderVerdict("finite", order, min_poly_str, report)
    return OrderVerdict("infinite", None, min_poly_str, report)


def finite_order_exponent(dim):
    """lcm of all possible finite orders of a dim x dim rational matrix.

    A finite-order matrix has squarefree minimal polynomial that is a
    product of distinct cyclotomics with totient <= dim, so its order
    divides this number; M is finite order iff M**E = I.
    """
    ms = [m for m in range(1, 2 * dim * dim + 2) if totient(m) <= dim]
    return math.lcm(*ms)


def is_finite_order(matrix):
    e = finite_order_exponent(len(matrix))
    return linalg.is_identity(linalg.mat_pow(matrix, e))


# ---------------------------------------------------------------------------
# the infinite-order search and the inner quotient check

def transvection_power_pool(cover: CoveringComplex, *, shifted_bases=(),
                            min_power=1):
    """Transvection powers in the standard and shifted bases that act
    trivially on the deck group: tau_{S,x_i,x_j}^m with m the image order.

    Each shifted basis is given by a NielsenAuto psi; the transvection in
    the basis psi(standard) is psi tau psi^-1.
    """
    surj = cover.surjection
    pool = []
    n = cover.n
    for psi in (None, *shifted_bases):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i == j:
                    continue
                y_j = generator(j, n) if psi is None else apply_auto(psi, generator(j, n))
                m = surj.order_of_image(y_j)
                m = max(m, min_power)
                from .words import transvection
                tau = transvection(n, i, j, m)
                if psi is not None:
                    tau = psi.compose(tau).compose(psi.inverse())
                label = f"tau({i},{j})^{m}" + ("" if psi is None else "@shifted")
                if is_aut_r(cover, tau):
                    pool.append((label, tau))
    return pool


def find_autr_pool(cover: CoveringComplex, projector, *, max_depth=4,
                   max_pool=6, max_nodes=20000):
    """Bounded search over short Nielsen products for deck-trivial
    automorphisms with a non-scalar action on W (experimental pool)."""
    from .words import elementary_moves
    n = cover.n
    moves = elementary_moves(n)
    identity_images = tuple(generator(i, n) for i in range(1, n + 1))
    seen = {identity_images}
    frontier = [(identity_images, ())]
    pool = []
    nodes = 0
    for _ in range(max_depth):
        nxt = []
        for images, trail in frontier:
            for move in moves:
                nodes += 1
                if nodes > max_nodes:
                    return pool
                auto_move = NielsenAuto(n, (move,))
                new_images = tuple(apply_auto(auto_move, w) for w in images)
                if new_images in seen:
                    continue
                seen.add(new_images)
                new_trail = trail + (move,)
                nxt.append((new_images, new_trail))
                auto = NielsenAuto(n, new_trail)
                if is_aut_r(cover, auto):
                    mat = project_to_w(cover, projector, auto)
                    if not _is_scalar(mat):
                        pool.append((f"nielsen{new_trail}", auto))
                        if len(pool) >= max_pool:
                            return pool
        frontier = nxt
    return pool


def _is_scalar(mat):
    d = len(mat)
    lam = mat[0][0]
    return all(mat[i][j] == (lam if i == j else 0)
               for i in range(d) for j in range(d))


def matrix_product_search(mats, budget, exponent):
    """BFS over products of the given matrices for one that fails the
    finite-order exponent screen (M**exponent != I).

    Returns (word, matrix, stats); word is None on exhaustion.  Products
    are deduplicated exactly, so the search stops early when the pool
    generates a finite matrix group smaller than the budget.
    """
    dim = len(mats[0]) if mats else 0
    identity = linalg.identity_matrix(dim)

    def key(mat):
        return tuple(tuple(row) for row in mat)

    seen = {key(identity): ()}
    queue = deque([(identity, ())])
    explored = 0
    max_len = 0
    while queue and explored < budget:
        mat, word = queue.popleft()
        for idx, gen_mat in enumerate(mats):
            if explored >= budget:
                break
            explored += 1
            candidate = linalg.mat_mul(mat, gen_mat)
            k = key(candidate)
            if k in seen:
                continue
            new_word = word + (idx,)
            seen[k] = new_word
            max_len = max(max_len, len(new_word))
            stats = {"explored": explored, "distinct": len(seen),
                     "maxProductLength": max_len}
            if not linalg.is_identity(linalg.mat_pow(candidate, exponent)):
                return new_word, candidate, stats
            queue.append((candidate, new_word))
    return None, None, {"explored": explored, "distinct": len(seen),
                        "maxProductLength": max_len}


def certify_infinite_action(cover: CoveringComplex, projector, matrix,
                            pool_word, labels, autos):
    """Evidence record for an infinite-order W-action: the exact order
    decision (with its non-cyclotomic factors) plus the inner-quotient
    survival check."""
    verdict = order_decision(matrix)
    if verdict.verdict != "infinite":
        raise RefutedError("exponent screen disagrees with the order decision")
    inn = inn_quotient_check(cover, projector, matrix)
    return {
        "poolWord": [labels[i] for i in pool_word],
        "autFactorization": [list(m) for i in pool_word
                             for m in autos[i].moves],
        "matrix": [[str(x) for x in row] for row in matrix],
        "order": verdict.to_payload(),
        "nonCyclotomicFactors": [f for f in verdict.factors
                                 if f["cyclotomicIndex"] is None
                                 or f["multiplicity"] > 1],
        "innQuotient": inn,
    }


def search_infinite_order(cover: CoveringComplex, projector, pool, budget):
    """Breadth-first search over products of pool W-actions for an
    infinite-order element.

    Every pool element must pass the is_aut_r gate.  Candidates are
    screened with the exact finite-order exponent test; a hit is certified
    by the full order decision (non-cyclotomic minimal-polynomial factor)
    plus the inner-quotient check.  Exhausting the budget is a report
    state, not an error.
    """
    labels = [label for label, _ in pool]
    autos = [auto for _, auto in pool]
    for label, auto in pool:
        if not is_aut_r(cover, auto):
            raise UsageError(f"pool element {label} fails the deck-trivial gate")
    mats = [project_to_w(cover, projector, auto) for auto in autos]
    exponent = finite_order_exponent(projector.rank_on_h1)
    word, matrix, stats = matrix_product_search(mats, budget, exponent)
    report = {"found": word is not None, "budget": budget, "pool": labels,
              "witness": None, **stats}
    if word is not None:
        report["witness"] = certify_infinite_action(cover, projector, matrix,
                                                    word, labels, autos)
    return report


def inn_quotient_check(cover: CoveringComplex, projector, phi_w_matrix):
    """Check that an infinite-order W-action survives the inner quotient.

    Conjugations by preimages of central elements span the inner part; all
    their W-actions must be finite order, and the lcm-th power of the
    candidate must still be infinite order.
    """
    group = cover.group
    section = cover.surjection.section()
    orders = []
    details = []
    for z in group.center():
        if z == 0:
            continue
        conj = conjugation_by_word(section[z])
        if not is_aut_r(cover, conj):
            raise RefutedError("central conjugation fails the deck-trivial gate")
        verdict = order_decision(project_to_w(cover, projector, conj))
        if verdict.verdict != "finite":
            return {"ok": False, "reason":
                    f"conjugation by preimage of {group.names[z]} has infinite order"}
        orders.append(verdict.order)
        details.append({"central": group.names[z], "order": verdict.order})
    lam = math.lcm(*orders) if orders else 1
    power_verdict = order_decision(linalg.mat_pow(phi_w_matrix, lam))
    return {"ok": power_verdict.verdict == "infinite", "lambda": lam,
            "centralOrders": details,
            "powerVerdict": power_verdict.to_payload()}
