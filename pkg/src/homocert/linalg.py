"""Exact dense linear algebra over Z and Q.

Matrices are lists of row lists holding Python ints or fractions.Fraction;
nothing here ever touches floating point.  Sizes are desk scale (a few
hundred), so the simple quadratic/cubic algorithms below are fine.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import UsageError


def identity_matrix(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zero_vector(n):
    return [0] * n


def mat_mul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        ai = a[i]
        oi = out[i]
        for k in range(inner):
            aik = ai[k]
            if aik == 0:
                continue
            bk = b[k]
            for j in range(cols):
                oi[j] += aik * bk[j]
    return out


def mat_vec(a, v):
    return [sum(ai[k] * v[k] for k in range(len(v))) for ai in a]


def mat_eq(a, b):
    if len(a) != len(b) or len(a[0]) != len(b[0]):
        return False
    return all(a[i][j] == b[i][j] for i in range(len(a)) for j in range(len(a[0])))


def is_identity(a):
    return mat_eq(a, identity_matrix(len(a)))


def transpose(a):
    return [list(col) for col in zip(*a)]


def mat_pow(a, k):
    """a**k by repeated squaring (k >= 0)."""
    n = len(a)
    result = identity_matrix(n)
    base = a
    while k:
        if k & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base) if k > 1 else base
        k >>= 1
    return result


# numpy int64 products are exact as long as no intermediate exceeds 2**63;
# the guard below keeps a comfortable margin and falls back to Python ints.
_INT64_GUARD = 2 ** 30


def _max_abs(a):
    m = 0
    for row in a:
        for x in row:
            if x < 0:
                x = -x
            if x > m:
                m = x
    return m


def int_mat_mul(a, b):
    """Exact product of integer matrices, numpy-accelerated when safe."""
    inner = len(b)
    if inner and _max_abs(a) < _INT64_GUARD and _max_abs(b) < _INT64_GUARD \
            and inner * _INT64_GUARD * _INT64_GUARD < 2 ** 62:
        prod = np.array(a, dtype=np.int64) @ np.array(b, dtype=np.int64)
        return [[int(x) for x in row] for row in prod]
    return mat_mul(a, b)


def int_mat_pow(a, k):
    n = len(a)
    result = identity_matrix(n)
    base = a
    while k:
        if k & 1:
            result = int_mat_mul(result, base)
        if k > 1:
            base = int_mat_mul(base, base)
        k >>= 1
    return result


def rref(matrix):
    """Row-reduce over Q.  Returns (rows, pivot_columns); input untouched."""
    rows = [[Fraction(x) for x in row] for row in matrix]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def rank(matrix):
    return len(rref(matrix)[1])


def kernel_basis(matrix):
    """Columns spanning ker(matrix) over Q (matrix given by rows)."""
    reduced, pivots = rref(matrix)
    ncols = len(matrix[0]) if matrix else 0
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -reduced[r][f]
        basis.append(v)
    return basis


class ColumnSpace:
    """Incremental column-space tracker over Q."""

    def __init__(self, dim):
        self.dim = dim
        self._rows = []       # reduced rows
        self._pivots = []     # pivot position per reduced row

    def _reduce(self, vec):
        v = [Fraction(x) for x in vec]
        for row, p in zip(self._rows, self._pivots):
            if v[p] != 0:
                f = v[p]
                for j in range(self.dim):
                    v[j] -= f * row[j]
        return v

    def add(self, vec):
        """Insert a vector; True if it enlarged the span."""
        v = self._reduce(vec)
        p = next((j for j in range(self.dim) if v[j] != 0), None)
        if p is None:
            return False
        inv = Fraction(1) / v[p]
        v = [x * inv for x in v]
        self._rows.append(v)
        self._pivots.append(p)
        return True

    def contains(self, vec):
        return all(x == 0 for x in self._reduce(vec))

    @property
    def rank(self):
        return len(self._rows)


class CoordinateSolver:
    """Exact coordinates with respect to a fixed independent column set.

    Precomputes a row transform t with t * [columns] = [I_k; 0], so that
    coords(v) is a single matrix-vector product plus a consistency check.
    """

    def __init__(self, columns):
        self.dim = len(columns[0]) if columns else 0
        self.k = len(columns)
        aug = [[Fraction(columns[j][r]) for j in range(self.k)]
               + [Fraction(1) if c == r else Fraction(0) for c in range(self.dim)]
               for r in range(self.dim)]
        reduced, pivots = rref(aug)
        if pivots[: self.k] != list(range(self.k)):
            raise UsageError("columns are not linearly independent")
        self._transform = [row[self.k:] for row in reduced]

    def coords(self, vec):
        """Solve columns * x = vec; raises if vec is outside the span."""
        w = mat_vec(self._transform, [Fraction(x) for x in vec])
        if any(x != 0 for x in w[self.k:]):
            raise UsageError("vector not in span of basis columns")
        return w[: self.k]

    def in_span(self, vec):
        w = mat_vec(self._transform, [Fraction(x) for x in vec])
        return all(x == 0 for x in w[self.k:])


def smith_normal_form(matrix):
    """Smith normal form with transforms: returns (d, u, v), u*m*v = d.

    u, v are unimodular; d is diagonal with d[i] | d[i+1].  All exact ints.
    """
    m = [list(map(int, row)) for row in matrix]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    u = identity_matrix(nrows)
    v = identity_matrix(ncols)

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in m:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):
        m[dst] = [x + f * y for x, y in zip(m[dst], m[src])]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    def add_col(dst, src, f):
        for row in m:
            row[dst] += f * row[src]
        for row in v:
            row[dst] += f * row[src]

    def negate_row(i):
        m[i] = [-x for x in m[i]]
        u[i] = [-x for x in u[i]]

    for s in range(min(nrows, ncols)):
        while True:
            # Find the entry of least nonzero magnitude in the trailing block.
            best = None
            for i in range(s, nrows):
                for j in range(s, ncols):
                    x = m[i][j]
                    if x != 0 and (best is None or abs(x) < abs(m[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            i, j = best
            if i != s:
                swap_rows(s, i)
            if j != s:
                swap_cols(s, j)
            if m[s][s] < 0:
                negate_row(s)
            done = True
            for i in range(s + 1, nrows):
                if m[i][s] != 0:
                    add_row(i, s, -(m[i][s] // m[s][s]))
                    if m[i][s] != 0:
                        done = False
            for j in range(s + 1, ncols):
                if m[s][j] != 0:
                    add_col(j, s, -(m[s][j] // m[s][s]))
                    if m[s][j] != 0:
                        done = False
            if not done:
                continue
            # Force divisibility of the remaining block by the pivot.
            offender = None
            for i in range(s + 1, nrows):
                for j in range(s + 1, ncols):
                    if m[i][j] % m[s][s] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(s, offender, 1)
    diag = [m[i][i] for i in range(min(nrows, ncols))]
    return m, u, v, diag


def det_int(matrix):
    """Determinant of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [list(map(int, row)) for row in matrix]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            pivot = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if pivot is None:
                return 0
            m[k], m[pivot] = m[pivot], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


class IntegerLattice:
    """Incremental column-echelon basis of a sublattice of Z^dim.

    Columns are inserted one at a time and reduced against the current
    basis with exact extended-gcd column operations, so the basis always
    has strictly increasing pivot rows.
    """

    def __init__(self, dim):
        self.dim = dim
        self.basis = []   # columns, kept sorted by pivot row

    @staticmethod
    def _pivot(col):
        return next((i for i, x in enumerate(col) if x != 0), None)

    def add(self, column):
        """Insert a column; True if the lattice grew."""
        col = [int(x) for x in column]
        grew = False
        while True:
            p = self._pivot(col)
            if p is None:
                return grew
            pos = next((idx for idx, b in enumerate(self.basis)
                        if self._pivot(b) >= p), len(self.basis))
            if pos == len(self.basis) or self._pivot(self.basis[pos]) > p:
                self.basis.insert(pos, col)
                return True
            b = self.basis[pos]
            # gcd-combine so the stored column keeps the pivot.
            g, x, y = _xgcd(b[p], col[p])
            bb = [x * b[i] + y * col[i] for i in range(self.dim)]
            fb, fc = b[p] // g, col[p] // g
            col = [fb * col[i] - fc * b[i] for i in range(self.dim)]
            if bb != b:
                grew = True
            self.basis[pos] = bb

    def contains(self, column):
        col = [int(x) for x in column]
        for b in self.basis:
            p = self._pivot(b)
            if col[p] % b[p] == 0:
                f = col[p] // b[p]
                if f:
                    col = [c - f * bi for c, bi in zip(col, b)]
        return all(x == 0 for x in col)

    @property
    def rank(self):
        return len(self.basis)


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


# ---------------------------------------------------------------------------
# polynomials over Q, coefficient lists in ascending degree order

def poly_normalize(p):
    while len(p) > 1 and p[-1] == 0:
        p = p[:-1]
    return p


def poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly_normalize(out)


def poly_divmod(p, q):
    p = [Fraction(x) for x in p]
    q = poly_normalize([Fraction(x) for x in q])
    if q == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [Fraction(0)] * max(1, len(p) - len(q) + 1)
    rem = list(p)
    while len(rem) >= len(q) and poly_normalize(rem) != [0]:
        rem = poly_normalize(rem)
        if len(rem) < len(q):
            break
        f = rem[-1] / q[-1]
        d = len(rem) - len(q)
        quot[d] = f
        rem = [rem[i] - f * q[i - d] if 0 <= i - d < len(q) else rem[i]
               for i in range(len(rem))]
        rem = rem[:-1]
    return poly_normalize(quot), poly_normalize(rem or [Fraction(0)])


def poly_gcd(p, q):
    p = poly_normalize([Fraction(x) for x in p])
    q = poly_normalize([Fraction(x) for x in q])
    while q != [0]:
        p, q = q, poly_divmod(p, q)[1]
    if p[-1] != 0:
        p = [x / p[-1] for x in p]
    return p


def poly_lcm(p, q):
    g = poly_gcd(p, q)
    quot, rem = poly_divmod(poly_mul(p, q), g)
    assert rem == [0]
    if quot[-1] != 0:
        quot = [x / quot[-1] for x in quot]
    return quot


def minimal_polynomial(matrix):
    """Monic minimal polynomial of a square matrix over Q (ascending coeffs).

    Krylov method: annihilator of each standard basis vector via exact
    elimination, combined by lcm; stops early at full degree.
    """
    n = len(matrix)
    mat = [[Fraction(x) for x in row] for row in matrix]
    best = [Fraction(1)]
    for start in range(n):
        if len(best) == n + 1:
            break
        v = [Fraction(0)] * n
        v[start] = Fraction(1)
        # Reduced Krylov vectors plus the combination that produced them.
        rows = []      # reduced vectors
        pivots = []
        combos = []    # coefficients in terms of v, Mv, M^2 v, ...
        iterates = [v]
        k = 0
        while True:
            w = list(iterates[k])
            combo = [Fraction(0)] * (k + 1)
            combo[k] = Fraction(1)
            for row, p, cmb in zip(rows, pivots, combos):
                if w[p] != 0:
                    f = w[p]
                    w = [a - f * b for a, b in zip(w, row)]
                    combo = [a - f * (cmb[i] if i < len(cmb) else 0)
                             for i, a in enumerate(combo)]
            p = next((j for j in range(n) if w[j] != 0), None)
            if p is None:
                # combo gives the monic annihilator of v.
                ann = poly_normalize(combo)
                ann = [x / ann[-1] for x in ann]
                best = poly_lcm(best, ann)
                break
            inv = Fraction(1) / w[p]
            rows.append([x * inv for x in w])
            pivots.append(p)
            combos.append([x * inv for x in combo])
            iterates.append(mat_vec(mat, iterates[k]))
            k += 1
    return best


def export_triplets(matrix):
    """Plain-text integer triplet dump: 'row col value' per nonzero entry."""
    lines = [f"{len(matrix)} {len(matrix[0]) if matrix else 0}"]
    for i, row in enumerate(matrix):
        for j, x in enumerate(row):
            if x != 0:
                lines.append(f"{i} {j} {x}")
    return "\n".join(lines) + "\n"
