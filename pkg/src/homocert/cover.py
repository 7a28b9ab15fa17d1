"""The covering chain complex of a finite quotient of a free group.

For a surjection pi: F_n -> G the based cover of the rose has vertices G
and one i-edge g -> g*g_i per (g, i); C_1 is free on the edges, C_0 on the
vertices, and H_1 of the kernel subgroup R = ker(pi) is ker(boundary).
All arithmetic is exact (ints, Fractions).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime, nextprime

from . import linalg
from .errors import RefutedError, UsageError
from .groups import GroupTable
from .stallings import CoreGraph, coset_action, is_normal
from .words import OrbitSpec, Word, enumerate_orbit_ball, word_to_string


class Surjection:
    """A surjection F_n -> G given by a group table and generator images.

    The kernel R is normal by construction (it is the kernel of a genuine
    homomorphism), which is the normality witness downstream consumers
    need.  Generation is verified eagerly.
    """

    def __init__(self, group: GroupTable, images, origin="table", name=None):
        self.group = group
        self.images = tuple(int(g) for g in images)
        self.origin = origin
        self.name = name or f"order-{group.size} quotient"
        if group.closure(self.images) != set(range(group.size)):
            raise UsageError("generator images do not generate the group")
        self._section = None

    @property
    def rank(self):
        return len(self.images)

    def image_of_letter(self, letter):
        g = self.images[abs(letter) - 1]
        return g if letter > 0 else self.group.inv(g)

    def image_of_word(self, w: Word):
        g = 0
        for letter in w.letters:
            g = self.group.mult(g, self.image_of_letter(letter))
        return g

    def order_of_image(self, w: Word):
        return self.group.order_of(self.image_of_word(w))

    def section(self):
        """BFS-shortest preimage word per group element (lex tie-break).

        Letter order 1 < 1^-1 < 2 < 2^-1 < ...; the identity gets the
        empty word.  Deterministic, recorded in certificates.
        """
        if self._section is None:
            words = {0: ()}
            queue = deque([0])
            letters = [l for i in range(1, self.rank + 1) for l in (i, -i)]
            while queue:
                g = queue.popleft()
                for letter in letters:
                    h = self.group.mult(g, self.image_of_letter(letter))
                    if h not in words:
                        words[h] = words[g] + (letter,)
                        queue.append(h)
            if len(words) != self.group.size:
                raise UsageError("section construction failed to reach all elements")
            self._section = [Word(words[g], self.rank) for g in range(self.group.size)]
        return self._section


def surjection_from_covering(graph: CoreGraph) -> Surjection:
    """Surjection onto the deck group of a *normal* covering graph."""
    if not is_normal(graph):
        raise UsageError("covering graph is not normal; no deck-group surjection")
    from .groups import from_permutations
    table, gen_ids = from_permutations(coset_action(graph))
    if table.size != graph.num_vertices:
        raise RefutedError("regular action has wrong order")
    return Surjection(table, gen_ids, origin="coset-action")


class CoveringComplex:
    """C_1 -> C_0 of the based cover, with a spanning-tree cycle basis.

    C_1 basis index of the edge (g, i) is (i-1)*N + g.  The fundamental
    cycles of the non-tree edges form a Z-basis of ker(boundary) whose
    restriction to the non-tree coordinates is the identity, so cycle
    coordinates are literally reads at non-tree positions.
    """

    def __init__(self, surjection: Surjection):
        self.surjection = surjection
        self.group = surjection.group
        self.n = surjection.rank
        self.N = self.group.size
        self.c1_dim = self.n * self.N
        self._build_tree()

    # -- indexing -----------------------------------------------------
    def c1_index(self, g, i):
        return (i - 1) * self.N + g

    def edge_of_index(self, idx):
        return idx % self.N, idx // self.N + 1

    # -- construction -------------------------------------------------
    def _build_tree(self):
        group, n = self.group, self.n
        tree_paths = {0: {}}
        order = [0]
        queue = deque([0])
        tree_edges = set()
        while queue:
            g = queue.popleft()
            for i in range(1, n + 1):
                gi = self.surjection.images[i - 1]
                for forward in (True, False):
                    h = group.mult(g, gi if forward else group.inv(gi))
                    if h in tree_paths:
                        continue
                    edge = self.c1_index(g if forward else h, i)
                    path = dict(tree_paths[g])
                    path[edge] = path.get(edge, 0) + (1 if forward else -1)
                    if path[edge] == 0:
                        del path[edge]
                    tree_paths[h] = path
                    tree_edges.add(edge)
                    order.append(h)
                    queue.append(h)
        if len(order) != self.N:
            raise UsageError("cover is not connected: generation failure")
        self.tree_paths = tree_paths
        self.tree_edges = tree_edges
        self.nontree = [idx for idx in range(self.c1_dim) if idx not in tree_edges]
        self.h1_dim = len(self.nontree)
        self._nontree_pos = {idx: pos for pos, idx in enumerate(self.nontree)}
        # fundamental cycles
        self.cycles = []
        for idx in self.nontree:
            g, i = self.edge_of_index(idx)
            h = group.mult(g, self.surjection.images[i - 1])
            z = dict(self.tree_paths[g])
            z[idx] = z.get(idx, 0) + 1
            for e, c in self.tree_paths[h].items():
                v = z.get(e, 0) - c
                if v:
                    z[e] = v
                else:
                    z.pop(e, None)
            self.cycles.append(z)

    # -- chains -------------------------------------------------------
    def boundary_matrix(self):
        """N x (n*N) integer matrix of the boundary map."""
        mat = [[0] * self.c1_dim for _ in range(self.N)]
        for i in range(1, self.n + 1):
            gi = self.surjection.images[i - 1]
            for g in range(self.N):
                idx = self.c1_index(g, i)
                h = self.group.mult(g, gi)
                mat[h][idx] += 1
                mat[g][idx] -= 1
        return mat

    def boundary_of(self, chain):
        out = {}
        for idx, c in chain.items():
            g, i = self.edge_of_index(idx)
            h = self.group.mult(g, self.surjection.images[i - 1])
            for vertex, sign in ((h, c), (g, -c)):
                v = out.get(vertex, 0) + sign
                if v:
                    out[vertex] = v
                else:
                    out.pop(vertex, None)
        return out

    def is_cycle(self, chain):
        return not self.boundary_of(chain)

    def act(self, g, chain):
        """Deck-group action: the edge (h, i) goes to (g*h, i)."""
        out = {}
        for idx, c in chain.items():
            h, i = self.edge_of_index(idx)
            out[self.c1_index(self.group.mult(g, h), i)] = c
        return out

    def tree_coords(self, chain):
        """Coordinates of a cycle in the fundamental-cycle basis."""
        if not self.is_cycle(chain):
            raise UsageError("chain is not a cycle")
        return [chain.get(idx, 0) for idx in self.nontree]

    def coords_to_chain(self, coords):
        out = {}
        for c, z in zip(coords, self.cycles):
            if c == 0:
                continue
            for idx, v in z.items():
                s = out.get(idx, 0) + c * v
                if s:
                    out[idx] = s
                else:
                    out.pop(idx, None)
        return out

    def to_dense(self, chain):
        v = [0] * self.c1_dim
        for idx, c in chain.items():
            v[idx] = c
        return v

    def action_matrix_on_h1(self, g):
        """Matrix of the deck action of g in the fundamental-cycle basis."""
        return linalg.transpose([self.tree_coords(self.act(g, z))
                                 for z in self.cycles])


def build_cover(surjection: Surjection) -> CoveringComplex:
    """Build the covering complex and verify dim ker(boundary) exactly."""
    cover = CoveringComplex(surjection)
    expected = 1 + (cover.n - 1) * cover.N
    if cover.h1_dim != expected:
        raise RefutedError(f"H1 dimension {cover.h1_dim} != {expected}")
    boundary_rank = linalg.rank(cover.boundary_matrix())
    if boundary_rank != cover.N - 1:
        raise RefutedError("boundary rank is not |G| - 1")
    for z in cover.cycles:
        if not cover.is_cycle(z):
            raise RefutedError("fundamental cycle with nonzero boundary")
    return cover


def lift_chain(cover: CoveringComplex, w: Word):
    """Fox-derivative lift of the path of w to the cover (a 1-chain).

    Reading x_i after prefix u contributes + (pi(u), i); reading x_i^-1
    contributes - (pi(u) g_i^-1, i).  The boundary is pi(w) - basepoint.
    """
    group = cover.group
    chain = {}
    u = 0
    for letter in w.letters:
        i = abs(letter)
        gi = cover.surjection.images[i - 1]
        if letter > 0:
            idx = cover.c1_index(u, i)
            delta = 1
            u = group.mult(u, gi)
        else:
            u = group.mult(u, group.inv(gi))
            idx = cover.c1_index(u, i)
            delta = -1
        v = chain.get(idx, 0) + delta
        if v:
            chain[idx] = v
        else:
            chain.pop(idx, None)
    return chain


def h1_basis(cover: CoveringComplex, coeffs="Q"):
    """Basis of H1 as columns: spanning-tree lattice basis over Z, or an
    independently computed elimination kernel over Q."""
    if coeffs == "Z":
        return [cover.to_dense(z) for z in cover.cycles]
    if coeffs == "Q":
        return linalg.kernel_basis(cover.boundary_matrix())
    raise UsageError("coeffs must be 'Q' or 'Z'")


def gaschutz_trace_check(cover: CoveringComplex):
    """Trace of every deck transformation on H1 vs (n-1)|G|[g=1] + 1.

    Requires R normal, which holds for kernels of table surjections.
    Returns (all_ok, rows).
    """
    rows = []
    ok = True
    for g in range(cover.N):
        trace = 0
        for pos, z in enumerate(cover.cycles):
            moved = cover.act(g, z)
            trace += moved.get(cover.nontree[pos], 0)
        expected = (cover.n - 1) * cover.N + 1 if g == 0 else 1
        good = trace == expected
        ok = ok and good
        rows.append({"element": cover.group.names[g], "trace": trace,
                     "expected": expected, "ok": good})
    return ok, rows


# ---------------------------------------------------------------------------
# the isotypic projector

class PsiProjector:
    """Idempotent e = avg(ker Psi) - avg(C) acting on the covering complex.

    Central character data (C, Psi) with Psi: C -> Z/p surjective; e kills
    every C-invariant vector and fixes the part where ker(Psi) acts
    trivially but C does not, which contains the relevant isotypic
    component.  Every g with a power in C - ker(Psi) acts on image(e)
    without nonzero fixed vectors (verified by rank).
    """

    def __init__(self, cover: CoveringComplex, central: list, psi: dict, p: int):
        if not isprime(p):
            raise UsageError(f"{p} is not prime")
        group = cover.group
        self.cover = cover
        self.p = p
        self.C = sorted(int(c) for c in central)
        self.psi = {int(c): int(v) % p for c, v in psi.items()}
        if sorted(self.psi) != self.C:
            raise UsageError("Psi must be defined exactly on C")
        center = set(group.center())
        if not set(self.C) <= center:
            raise UsageError("C is not central")
        if 0 not in self.psi or self.psi[0] != 0:
            raise UsageError("Psi must send the identity to 0")
        cset = set(self.C)
        for a in self.C:
            for b in self.C:
                ab = group.mult(a, b)
                if ab not in cset:
                    raise UsageError("C is not a subgroup")
                if (self.psi[a] + self.psi[b] - self.psi[ab]) % p:
                    raise UsageError("Psi is not a homomorphism")
        if all(v == 0 for v in self.psi.values()):
            raise UsageError("Psi must be surjective onto Z/p")
        self.K = [c for c in self.C if self.psi[c] == 0]
        self._w_basis = None
        self._w_solver = None

    def apply_chain(self, chain):
        """e applied to a sparse chain; values become Fractions."""
        cover = self.cover
        out = {}
        for c in self.K:
            for idx, v in cover.act(c, chain).items():
                out[idx] = out.get(idx, 0) + Fraction(v, len(self.K))
        for c in self.C:
            for idx, v in cover.act(c, chain).items():
                out[idx] = out.get(idx, 0) - Fraction(v, len(self.C))
        return {idx: v for idx, v in out.items() if v}

    def apply_dense(self, vec):
        chain = {i: x for i, x in enumerate(vec) if x}
        out = self.apply_chain(chain)
        return [out.get(i, Fraction(0)) for i in range(self.cover.c1_dim)]

    def matrix(self):
        dim = self.cover.c1_dim
        cols = []
        for j in range(dim):
            image = self.apply_chain({j: 1})
            cols.append([image.get(i, Fraction(0)) for i in range(dim)])
        return linalg.transpose(cols)

    def w_basis(self):
        """Deterministic basis of e(H1) = image(e) intersect H1 (C1 coords)."""
        if self._w_basis is None:
            space = linalg.ColumnSpace(self.cover.c1_dim)
            basis = []
            for z in self.cover.cycles:
                image = self.apply_chain(z)
                vec = [image.get(i, Fraction(0)) for i in range(self.cover.c1_dim)]
                if space.add(vec):
                    basis.append(vec)
            self._w_basis = basis
        return self._w_basis

    def w_solver(self):
        if self._w_solver is None:
            self._w_solver = linalg.CoordinateSolver(self.w_basis())
        return self._w_solver

    @property
    def rank_on_h1(self):
        return len(self.w_basis())

    def elements_with_power_in_c_minus_k(self):
        group = self.cover.group
        kset = set(self.K)
        cset = set(self.C)
        out = []
        for g in range(group.size):
            if any(x in cset and x not in kset for x in group.cyclic_subgroup(g)):
                out.append(g)
        return out

    def projects_to_zero(self, chain):
        return not self.apply_chain(chain)


def psi_projector(cover: CoveringComplex, central, psi, p) -> PsiProjector:
    """Build and fully verify the projector: idempotent, G-equivariant,
    and fixed-point-free on image(e) for every g with a power in C - K."""
    proj = PsiProjector(cover, central, psi, p)
    e = proj.matrix()
    if not linalg.mat_eq(linalg.mat_mul(e, e), e):
        raise RefutedError("projector is not idempotent")
    # commuting with the deck action: permutation conjugation, entrywise
    for g in range(cover.N):
        perm = [0] * cover.c1_dim
        for idx in range(cover.c1_dim):
            h, i = cover.edge_of_index(idx)
            perm[idx] = cover.c1_index(cover.group.mult(g, h), i)
        for a in range(cover.c1_dim):
            for b in range(cover.c1_dim):
                if e[perm[a]][perm[b]] != e[a][b]:
                    raise RefutedError("projector does not commute with the action")
    # fixed-point-freeness on image(e)
    im_space = linalg.ColumnSpace(cover.c1_dim)
    im_basis = []
    for j in range(cover.c1_dim):
        col = [e[i][j] for i in range(cover.c1_dim)]
        if im_space.add(col):
            im_basis.append(col)
    for g in proj.elements_with_power_in_c_minus_k():
        cols = []
        for b in im_basis:
            chain = {i: x for i, x in enumerate(b) if x}
            moved = cover.act(g, chain)
            cols.append([moved.get(i, Fraction(0)) - b[i]
                         for i in range(cover.c1_dim)])
        if linalg.rank(linalg.transpose(cols)) != len(im_basis):
            raise RefutedError(
                f"element {cover.group.names[g]} fixes a nonzero vector of image(e)")
    return proj


# ---------------------------------------------------------------------------
# orbit spans and the properness certificate

@dataclass
class PowerClass:
    word: Word
    power: int            # order of pi(word)
    chain: dict           # lift of word**power, a cycle
    coords: list          # integer coordinates in the tree basis


def orbit_power_classes(cover: CoveringComplex, words):
    """The classes [x^m], m = order of pi(x), in tree coordinates."""
    out = []
    for w in sorted(words, key=lambda w: (len(w.letters), w.letters)):
        m = cover.surjection.order_of_image(w)
        chain = lift_chain(cover, w ** m)
        out.append(PowerClass(word=w, power=m, chain=chain,
                              coords=cover.tree_coords(chain)))
    return out


@dataclass
class SpanCertificate:
    instance: dict
    orbit: dict
    dims: dict
    verdict: str
    excluded_words: list
    notes: dict

    def to_payload(self):
        return {
            "instance": self.instance,
            "orbit": self.orbit,
            "dims": self.dims,
            "verdict": self.verdict,
            "excludedWords": self.excluded_words,
            "notes": self.notes,
        }


def proper_subspace_certificate(cover: CoveringComplex,
                                projector: PsiProjector | None,
                                spec: OrbitSpec,
                                *, instance=None,
                                orbit_caps=None) -> SpanCertificate:
    """Certify that the span of orbit power classes misses part of H1.

    Verdict "proper" needs: every projected class is exactly 0, the
    projector has positive rank on H1, and every enumerated word passed
    the power gate (some power of its image lies in C - ker Psi) unless
    the word set was declared exact.  Properness for the full orbit then
    follows because projection kills each class elementwise.
    """
    words = enumerate_orbit_ball(spec, cover.n, **(orbit_caps or {}))
    classes = orbit_power_classes(cover, words)
    span = linalg.ColumnSpace(cover.h1_dim)
    for pc in classes:
        span.add(pc.coords)

    excluded = []
    proj_span_rank = 0
    proj_rank = 0
    if projector is not None:
        gate_ok = set(projector.elements_with_power_in_c_minus_k())
        projected = linalg.ColumnSpace(cover.c1_dim)
        for pc in classes:
            if cover.surjection.image_of_word(pc.word) not in gate_ok:
                excluded.append(word_to_string(pc.word))
                continue
            image = projector.apply_chain(pc.chain)
            if image:
                projected.add([image.get(i, Fraction(0))
                               for i in range(cover.c1_dim)])
        proj_span_rank = projected.rank
        proj_rank = projector.rank_on_h1

    if span.rank == cover.h1_dim:
        verdict = "not-proper"
    elif projector is None:
        verdict = "inconclusive"
    elif excluded and not spec.exact:
        verdict = "inconclusive"
    elif proj_span_rank == 0 and proj_rank > 0:
        verdict = "proper"
    else:
        verdict = "inconclusive"

    dims = {
        "h1": cover.h1_dim,
        "span": span.rank,
        "projRank": proj_rank,
        "projSpanRank": proj_span_rank,
        "spanBound": cover.h1_dim - proj_rank if projector else None,
    }
    instance = dict(instance or {})
    instance.setdefault("group", {"order": cover.N,
                                  "name": cover.surjection.name})
    instance.setdefault("n", cover.n)
    return SpanCertificate(
        instance=instance,
        orbit={**spec.describe(), "count": len(classes)},
        dims=dims,
        verdict=verdict,
        excluded_words=excluded,
        notes={"origin": cover.surjection.origin},
    )


def select_prime(class_columns):
    """Smallest prime dividing no nonzero elementary divisor of the span.

    The class matrix columns live in the integral H1 basis; Smith normal
    form extracts the divisors.
    """
    if not class_columns:
        raise UsageError("no classes to select a prime from")
    dim = len(class_columns[0])
    mat = [[col[i] for col in class_columns] for i in range(dim)]
    _, _, _, diag = linalg.smith_normal_form(mat)
    divisors = [d for d in diag if d != 0]
    p = 2
    while any(d % p == 0 for d in divisors):
        p = nextprime(p)
    return int(p), divisors
