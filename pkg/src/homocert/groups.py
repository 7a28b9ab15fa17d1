"""Finite groups as explicit multiplication tables.

Element 0 is always the identity.  Tables come from permutation closures,
from the truncated-algebra enumeration, or are written down directly (Q8).
Kernels of maps onto such tables are normal by construction, which is the
normality witness the covering machinery relies on.
"""

from __future__ import annotations

from collections import deque
from math import lcm

from .errors import UsageError


class GroupTable:
    """A finite group: size, multiplication table, inverses, names."""

    def __init__(self, table, names=None, *, check=True):
        self.size = len(table)
        self.table = [list(map(int, row)) for row in table]
        self.names = list(names) if names is not None else [str(i) for i in range(self.size)]
        self.inverse = [-1] * self.size
        for a in range(self.size):
            for b in range(self.size):
                if self.table[a][b] == 0:
                    self.inverse[a] = b
        if check:
            self._check()

    def _check(self):
        n = self.size
        for a in range(n):
            if self.table[a][0] != a or self.table[0][a] != a:
                raise UsageError("element 0 is not an identity")
            if self.inverse[a] < 0:
                raise UsageError(f"element {a} has no inverse")
        if n <= 64:
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        if self.mult(self.mult(a, b), c) != self.mult(a, self.mult(b, c)):
                            raise UsageError("multiplication table is not associative")

    def mult(self, a, b):
        return self.table[a][b]

    def inv(self, a):
        return self.inverse[a]

    def power(self, a, k):
        if k < 0:
            return self.power(self.inv(a), -k)
        result = 0
        base = a
        while k:
            if k & 1:
                result = self.mult(result, base)
            base = self.mult(base, base)
            k >>= 1
        return result

    def order_of(self, a):
        order = 1
        x = a
        while x != 0:
            x = self.mult(x, a)
            order += 1
            if order > self.size:
                raise UsageError("broken table: element order exceeds group order")
        return order

    def exponent(self):
        return lcm(*[self.order_of(a) for a in range(self.size)])

    def center(self):
        return [a for a in range(self.size)
                if all(self.mult(a, b) == self.mult(b, a) for b in range(self.size))]

    def closure(self, elements):
        seen = set(elements) | {0}
        queue = deque(seen)
        while queue:
            a = queue.popleft()
            for b in list(elements):
                for c in (self.mult(a, b), self.mult(a, self.inv(b))):
                    if c not in seen:
                        seen.add(c)
                        queue.append(c)
        return seen

    def cyclic_subgroup(self, a):
        out = [0]
        x = a
        while x != 0:
            out.append(x)
            x = self.mult(x, a)
        return out


def from_permutations(perms, names_from_perms=True):
    """Group generated by permutations; returns (GroupTable, generator ids).

    Elements are discovered by BFS from the identity (deterministic ids,
    identity = 0).  The table multiplication is a*b = "apply a, then b"
    (i.e. b o a as functions), which makes tracing a word through the
    permutation action a homomorphism into the table.
    """
    degree = len(perms[0])
    perms = [tuple(p) for p in perms]
    identity = tuple(range(degree))

    def mult(a, b):
        # apply a first, then b
        return tuple(b[a[x]] for x in range(degree))

    ids = {identity: 0}
    elements = [identity]
    queue = deque([identity])
    gens_with_inv = perms + [_invert_perm(p) for p in perms]
    while queue:
        p = queue.popleft()
        for g in gens_with_inv:
            q = mult(p, g)
            if q not in ids:
                ids[q] = len(elements)
                elements.append(q)
                queue.append(q)
    table = [[ids[mult(a, b)] for b in elements] for a in elements]
    names = [repr(list(p)) for p in elements] if names_from_perms else None
    return GroupTable(table, names, check=False), [ids[p] for p in perms]


def _invert_perm(p):
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)


def trivial_group():
    return GroupTable([[0]], ["1"], check=False)


def cyclic_group(m):
    table = [[(a + b) % m for b in range(m)] for a in range(m)]
    return GroupTable(table, [str(a) for a in range(m)], check=False)


def quaternion_group():
    """The 8-element quaternion group; elements 1,-1,i,-i,j,-j,k,-k."""
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    # (sign, axis) encoding: axis 0 = scalar, 1 = i, 2 = j, 3 = k
    def decode(e):
        return (1 if e % 2 == 0 else -1, e // 2)

    def encode(sign, axis):
        return axis * 2 + (0 if sign == 1 else 1)

    mul_axis = {
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (2, 0): (1, 2), (3, 0): (1, 3),
        (1, 1): (-1, 0), (2, 2): (-1, 0), (3, 3): (-1, 0),
        (1, 2): (1, 3), (2, 1): (-1, 3),
        (2, 3): (1, 1), (3, 2): (-1, 1),
        (3, 1): (1, 2), (1, 3): (-1, 2),
    }
    table = []
    for a in range(8):
        sa, xa = decode(a)
        row = []
        for b in range(8):
            sb, xb = decode(b)
            sc, xc = mul_axis[(xa, xb)]
            row.append(encode(sa * sb * sc, xc))
        table.append(row)
    return GroupTable(table, names)


def symmetric3():
    """S3 as a permutation quotient; returns (table, [image of (01), image of (012)])."""
    return from_permutations([(1, 0, 2), (1, 2, 0)])
