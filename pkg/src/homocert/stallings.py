"""Stallings subgroup graphs of free groups.

A CoreGraph is a folded, based, labeled digraph: vertex 0 is the basepoint
and for each generator index i the i-labeled edges form a partial injection
`out[i]` on vertices.  The graph represents a finite-index subgroup exactly
when every out[i] is a total permutation (a covering graph).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import CapExceeded, UsageError
from .words import (NielsenAuto, Word, apply_auto, identity_word,
                    multiply, reduce)


class CoreGraph:
    """Folded based graph for a finitely generated subgroup of F_n."""

    def __init__(self, rank, num_vertices, out):
        self.rank = rank
        self.num_vertices = num_vertices
        # out[i-1]: dict vertex -> vertex along the x_i edge
        self.out = tuple(dict(d) for d in out)
        self.inn = tuple({w: v for v, w in d.items()} for d in self.out)
        for i, d in enumerate(self.out):
            if len(set(d.values())) != len(d):
                raise UsageError(f"graph not folded along generator {i + 1}")

    def step(self, vertex, letter):
        """Follow one letter from a vertex; None if the edge is missing."""
        if letter > 0:
            return self.out[letter - 1].get(vertex)
        return self.inn[-letter - 1].get(vertex)

    def trace(self, vertex, letters):
        for letter in letters:
            vertex = self.step(vertex, letter)
            if vertex is None:
                return None
        return vertex

    def is_covering(self):
        return all(len(d) == self.num_vertices for d in self.out)

    def degree(self, vertex):
        return sum((vertex in d) + (vertex in inn)
                   for d, inn in zip(self.out, self.inn))

    def edges(self):
        for i, d in enumerate(self.out):
            for v, w in sorted(d.items()):
                yield (v, i + 1, w)

    def __eq__(self, other):
        return isinstance(other, CoreGraph) and canonical_key(self) == canonical_key(other)

    def __hash__(self):
        return hash(canonical_key(self))

    def to_dot(self):
        lines = ["digraph core {", '  0 [shape=doublecircle];']
        from .words import _LOWER
        for v, i, w in self.edges():
            lines.append(f'  {v} -> {w} [label="{_LOWER[i - 1]}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _fold(rank, num_vertices, edges):
    """Fold a raw edge list (v, i, w); returns a CoreGraph on basepoint 0.

    Union-find on vertices; folding repeats until no generator has two
    out-edges (or two in-edges) from one class.  The result is independent
    of the edge insertion order (tested), so any order is fine.
    """
    parent = list(range(num_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    work = list(edges)
    while True:
        out = [dict() for _ in range(rank)]
        inn = [dict() for _ in range(rank)]
        merged = False
        for v, i, w in work:
            v, w = find(v), find(w)
            d, b = out[i - 1], inn[i - 1]
            if v in d and d[v] != w:
                union(d[v], w)
                merged = True
                break
            if w in b and b[w] != v:
                union(b[w], v)
                merged = True
                break
            d[v] = w
            b[w] = v
        if not merged:
            break
    # compact vertex ids, keeping the basepoint first
    used = sorted({find(v) for v, _, _ in work} | {find(w) for _, _, w in work}
                  | {find(0)})
    used.remove(find(0))
    relabel = {find(0): 0}
    for v in used:
        relabel[v] = len(relabel)
    out = [dict() for _ in range(rank)]
    for v, i, w in work:
        out[i - 1][relabel[find(v)]] = relabel[find(w)]
    return CoreGraph(rank, len(relabel), out)


def graph_from_words(gens, rank=None):
    """Folded core graph of the subgroup generated by `gens`."""
    gens = list(gens)
    if rank is None:
        if not gens:
            raise UsageError("need a rank for the trivial subgroup")
        rank = gens[0].rank
    if any(g.rank != rank for g in gens):
        raise UsageError("rank mismatch among generators")
    edges = []
    next_vertex = 1
    for g in gens:
        letters = g.letters
        if not letters:
            continue
        prev = 0
        for pos, letter in enumerate(letters):
            target = 0 if pos == len(letters) - 1 else next_vertex
            if pos != len(letters) - 1:
                next_vertex += 1
            if letter > 0:
                edges.append((prev, letter, target))
            else:
                edges.append((target, -letter, prev))
            prev = target
    return _fold(rank, max(next_vertex, 1), edges)


def membership(g: CoreGraph, w: Word) -> bool:
    """True iff w labels a loop at the basepoint."""
    return g.trace(0, w.letters) == 0


def index(g: CoreGraph):
    """Subgroup index: the vertex count for covering graphs, else math.inf."""
    return g.num_vertices if g.is_covering() else math.inf


def canonical_key(g: CoreGraph):
    """BFS-from-basepoint relabeling, serialized for equality and hashing."""
    order = {0: 0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for i in range(1, g.rank + 1):
            for w in (g.step(v, i), g.step(v, -i)):
                if w is not None and w not in order:
                    order[w] = len(order)
                    queue.append(w)
    edges = []
    for i, d in enumerate(g.out):
        for v, w in d.items():
            if v in order and w in order:
                edges.append((i + 1, order[v], order[w]))
    return (g.rank, len(order), tuple(sorted(edges)))


def canonicalize(g: CoreGraph) -> CoreGraph:
    rank, n, edges = canonical_key(g)
    out = [dict() for _ in range(rank)]
    for i, v, w in edges:
        out[i - 1][v] = w
    return CoreGraph(rank, n, out)


# ---------------------------------------------------------------------------
# Marshall Hall completion

@dataclass(frozen=True)
class PrimitivityCertificate:
    """Spanning-tree witness that a word is part of a free basis of T.

    The loop of the word at the basepoint crosses `distinguished_edge`
    exactly once (crossing_count re-verified); reading basis words off the
    tree puts the word itself at position `word_position`.
    """

    tree_edges: tuple
    distinguished_edge: tuple
    crossing_count: int
    basis: tuple
    word_position: int


def _complete_permutations(graph: CoreGraph) -> CoreGraph:
    """Extend each partial injection to a permutation, deterministically.

    Unmatched vertices map to themselves when legal, else to the smallest
    free target (major use: Hall completion).
    """
    out = []
    n = graph.num_vertices
    for d in graph.out:
        d = dict(d)
        targets = set(d.values())
        for v in range(n):
            if v in d:
                continue
            if v not in targets:
                d[v] = v
                targets.add(v)
            else:
                t = next(t for t in range(n) if t not in targets)
                d[v] = t
                targets.add(t)
        out.append(d)
    return CoreGraph(graph.rank, n, out)


def hall_completion(s: Word):
    """A finite-index covering graph T with s a member of a free basis of T.

    Returns (T, PrimitivityCertificate).  T has index <= len(s).  The
    construction writes s = u c u^-1 with c cyclically reduced; the folded
    cycle of s is then exactly a hair path (u) ending in an embedded cycle
    (c), every cycle edge crossed once, so picking the final cycle edge as
    the distinguished non-tree edge makes s a basis element.
    """
    if s.is_identity():
        raise UsageError("hall_completion needs a nonempty word")
    letters = s.letters
    half = 0
    while half < len(letters) // 2 and letters[half] == -letters[-1 - half]:
        half += 1
    hair = letters[:half]
    cycle = letters[half:len(letters) - half]
    assert cycle, "reduced words cannot be of the form u u^-1"

    edges = []          # (from, i, to) with direction normalized to +i
    traversal = []      # edges in the order the loop of s crosses them
    vertex = 0
    next_vertex = 1

    def add_step(current, letter, target):
        if letter > 0:
            e = (current, letter, target)
        else:
            e = (target, -letter, current)
        edges.append(e)
        traversal.append(e)
        return target

    for letter in hair:
        vertex = add_step(vertex, letter, next_vertex)
        next_vertex += 1
    attach = vertex
    for pos, letter in enumerate(cycle):
        target = attach if pos == len(cycle) - 1 else next_vertex
        if pos != len(cycle) - 1:
            next_vertex += 1
        vertex = add_step(vertex, letter, target)

    num_vertices = max(next_vertex, 1)
    out = [dict() for _ in range(s.rank)]
    for v, i, w in edges:
        if out[i - 1].get(v, w) != w:
            raise AssertionError("hair+cycle of a reduced word must be folded")
        out[i - 1][v] = w
    graph = CoreGraph(s.rank, num_vertices, out)
    completed = _complete_permutations(graph)

    distinguished = traversal[-1]
    tree_edges = tuple(e for e in dict.fromkeys(traversal) if e != distinguished)
    crossing = sum(1 for e in traversal if e == distinguished)

    basis, position = _tree_basis(completed, set(tree_edges), distinguished)
    if cycle[-1] < 0:
        # the loop crosses the distinguished edge against its orientation;
        # orient that basis element along the loop so it is literally s
        basis[position] = ~basis[position]
    cert = PrimitivityCertificate(tree_edges, distinguished, crossing,
                                  tuple(basis), position)
    if not membership(completed, s):
        raise AssertionError("completion lost the input word")
    return completed, cert


def spanning_tree(graph: CoreGraph):
    """BFS spanning tree from the basepoint: list of (vertex, i, head) edges."""
    seen = {0}
    tree = []
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for i in range(1, graph.rank + 1):
            for letter in (i, -i):
                w = graph.step(v, letter)
                if w is not None and w not in seen:
                    seen.add(w)
                    tree.append((v, i, w) if letter > 0 else (w, i, v))
                    queue.append(w)
    if len(seen) != graph.num_vertices:
        raise UsageError("graph is not connected from the basepoint")
    return tree


def _tree_paths(graph: CoreGraph, tree_edges):
    """Letter path from the basepoint to each vertex along tree edges."""
    adj = {}
    for (v, i, w) in tree_edges:
        adj.setdefault(v, []).append((i, w))
        adj.setdefault(w, []).append((-i, v))
    paths = {0: ()}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for letter, w in adj.get(v, []):
            if w not in paths:
                paths[w] = paths[v] + (letter,)
                queue.append(w)
    return paths


def _tree_basis(graph: CoreGraph, tree_edges, distinguished=None):
    """Free basis of the subgroup: one word per non-tree edge."""
    paths = _tree_paths(graph, tree_edges)
    basis = []
    position = -1
    for v, i, w in graph.edges():
        if (v, i, w) in tree_edges:
            continue
        letters = paths[v] + (i,) + tuple(-x for x in reversed(paths[w]))
        word = reduce(letters, graph.rank)
        if distinguished is not None and (v, i, w) == distinguished:
            position = len(basis)
        basis.append(word)
    return basis, position


def subgroup_basis(graph: CoreGraph):
    """A free basis read off a BFS spanning tree."""
    tree = spanning_tree(graph)
    basis, _ = _tree_basis(graph, set(tree))
    return basis


# ---------------------------------------------------------------------------
# intersections and orbit closure

def fiber_intersection(graphs, *, max_index: int = 100_000) -> CoreGraph:
    """Covering graph of the intersection of covering subgroups.

    Product coset action restricted to the basepoint component; the index
    divides the product of the indices.
    """
    graphs = list(graphs)
    if not graphs:
        raise UsageError("need at least one graph")
    for g in graphs:
        if not g.is_covering():
            raise UsageError("fiber_intersection needs covering graphs")
    product = 1
    for g in graphs:
        product *= g.num_vertices
    if product > max_index:
        raise CapExceeded(f"product index {product} exceeds cap {max_index}")
    rank = graphs[0].rank
    base = tuple(0 for _ in graphs)
    ids = {base: 0}
    queue = deque([base])
    out = [dict() for _ in range(rank)]
    while queue:
        state = queue.popleft()
        v = ids[state]
        for i in range(1, rank + 1):
            nxt = tuple(g.out[i - 1][s] for g, s in zip(graphs, state))
            if nxt not in ids:
                ids[nxt] = len(ids)
                queue.append(nxt)
            out[i - 1][v] = ids[nxt]
    return CoreGraph(rank, len(ids), out)


def aut_orbit_closure(graph: CoreGraph, *, max_orbit: int = 10_000):
    """All images of a finite-index subgroup under Aut(F_n).

    Closure under elementary Nielsen moves; finite because the index is an
    automorphism invariant.  Raises CapExceeded instead of truncating.
    """
    if not graph.is_covering():
        raise UsageError("orbit closure needs a covering graph")
    from .words import elementary_moves
    rank = graph.rank
    start = canonicalize(graph)
    seen = {canonical_key(start): start}
    queue = deque([start])
    moves = elementary_moves(rank)
    while queue:
        g = queue.popleft()
        basis = subgroup_basis(g)
        for move in moves:
            auto = NielsenAuto(rank, (move,))
            image = graph_from_words([apply_auto(auto, b) for b in basis], rank)
            if image.num_vertices != graph.num_vertices or not image.is_covering():
                raise AssertionError("automorphism image changed the index")
            key = canonical_key(image)
            if key not in seen:
                if len(seen) >= max_orbit:
                    raise CapExceeded(f"orbit size exceeds cap {max_orbit}")
                image = canonicalize(image)
                seen[key] = image
                queue.append(image)
    return list(seen.values())


def all_covering_graphs(rank, degree):
    """Every connected covering graph of given degree (exhaustive oracle).

    Brute force over generator permutations; exponential, test sizes only.
    """
    from itertools import permutations as perms
    points = list(range(degree))
    results = []
    seen = set()
    for assignment in _product_perms(list(perms(points)), rank):
        out = [dict(enumerate(p)) for p in assignment]
        g = CoreGraph(rank, degree, out)
        # connectivity
        reach = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for i in range(1, rank + 1):
                for w in (g.step(v, i), g.step(v, -i)):
                    if w not in reach:
                        reach.add(w)
                        queue.append(w)
        if len(reach) != degree:
            continue
        key = canonical_key(g)
        if key not in seen:
            seen.add(key)
            results.append(canonicalize(g))
    return results


def _product_perms(perm_list, repeat):
    if repeat == 0:
        yield ()
        return
    for head in perm_list:
        for tail in _product_perms(perm_list, repeat - 1):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# coset actions

def coset_action(graph: CoreGraph):
    """Generator permutations on vertices (one-line notation), basepoint 0."""
    if not graph.is_covering():
        raise UsageError("coset_action needs a covering graph")
    return [tuple(graph.out[i][v] for v in range(graph.num_vertices))
            for i in range(graph.rank)]


def is_normal(graph: CoreGraph) -> bool:
    """True iff the subgroup is normal: the coset action is regular.

    The image permutation group acts transitively on num_vertices points,
    so it is regular iff its order equals the vertex count; closure stops
    as soon as that bound is exceeded.
    """
    n = graph.num_vertices
    gens = [tuple(p) for p in coset_action(graph)]
    identity = tuple(range(n))
    seen = {identity}
    queue = deque([identity])
    while queue:
        p = queue.popleft()
        for g in gens:
            q = tuple(g[p[v]] for v in range(n))
            if q not in seen:
                if len(seen) >= n:
                    return False
                seen.add(q)
                queue.append(q)
    return len(seen) == n


def covering_graph_from_permutations(perms) -> CoreGraph:
    """Covering graph from one permutation per generator (basepoint 0)."""
    degree = len(perms[0])
    out = [dict(enumerate(p)) for p in perms]
    g = CoreGraph(len(perms), degree, out)
    if not g.is_covering():
        raise UsageError("permutations must be bijections")
    # connectivity check
    reach = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for i in range(1, g.rank + 1):
            for w in (g.step(v, i), g.step(v, -i)):
                if w not in reach:
                    reach.add(w)
                    queue.append(w)
    if len(reach) != degree:
        raise UsageError("permutation action is not transitive")
    return g


def coset_action_json(graph: CoreGraph):
    return {"degree": graph.num_vertices,
            "permutations": [list(p) for p in coset_action(graph)]}
