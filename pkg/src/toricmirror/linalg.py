"""Exact rational arithmetic helpers.

Everything in the engine is computed over Q.  gmpy2's mpq is used when
available (it is several times faster than fractions.Fraction on the dense
convolution loops); the stdlib Fraction is a drop-in fallback.  Both expose
.numerator/.denominator, which is all the serialization layer relies on.

The matrix routines operate on plain lists of lists of rationals and use
fraction-free/ordinary Gaussian elimination.  Sizes here are tiny (fan
dimension <= 3, a few dozen basis elements), so clarity wins over vectorized
cleverness.
"""

from __future__ import annotations

from typing import Iterable, Sequence

try:  # pragma: no cover - exercised implicitly by every test
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    from fractions import Fraction as QQ

ZERO = QQ(0)
ONE = QQ(1)


def qq(num, den=1):
    """Build an exact rational from integers (or pass a rational through)."""
    return QQ(num) if den == 1 else QQ(num, den)


def det_int(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    n = len(rows)
    if n == 0:
        return 1
    m = [list(map(int, r)) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def mat_inv(rows: Sequence[Sequence]) -> list[list]:
    """Inverse of a square matrix over Q.  Raises ZeroDivisionError if singular."""
    n = len(rows)
    aug = [[QQ(x) for x in row] + [ONE if i == j else ZERO for j in range(n)]
           for i, row in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = ONE / aug[col][col]
        aug[col] = [x * inv_p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def mat_mul_vec(rows: Sequence[Sequence], vec: Sequence) -> list:
    return [sum((QQ(a) * QQ(v) for a, v in zip(row, vec)), ZERO) for row in rows]


def rref(rows: Sequence[Sequence]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form over Q.

    Returns (reduced rows, pivot column indices).  Zero rows are dropped.
    """
    m = [[QQ(x) for x in row] for row in rows]
    pivots: list[int] = []
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv_p = ONE / m[rank][col]
        m[rank] = [x * inv_p for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
        if rank == len(m):
            break
    return m[:rank], pivots


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> list:
    """Solve a square linear system over Q exactly."""
    inv = mat_inv(rows)
    return mat_mul_vec(inv, rhs)


def rank_exact(rows: Iterable[Sequence]) -> int:
    rs = [list(r) for r in rows]
    if not rs:
        return 0
    return len(rref(rs)[0])


# --------------------------------------------------------------------------
# Small multivariate polynomial kernel: exponent tuple -> rational.
# Used by the fixed-point restriction (polynomials in the equivariant
# parameters and the loop variable z).  Variable convention is fixed by the
# caller; the last slot is reserved for z throughout this package.
# --------------------------------------------------------------------------

PolyDict = dict  # dict[tuple[int, ...], QQ]


def poly_const(nvars: int, c) -> PolyDict:
    c = QQ(c)
    return {} if c == 0 else {(0,) * nvars: c}


def poly_add(p: PolyDict, q: PolyDict) -> PolyDict:
    out = dict(p)
    for e, c in q.items():
        nc = out.get(e, ZERO) + c
        if nc == 0:
            out.pop(e, None)
        else:
            out[e] = nc
    return out


def poly_scale(p: PolyDict, c) -> PolyDict:
    c = QQ(c)
    if c == 0:
        return {}
    return {e: v * c for e, v in p.items()}


def poly_mul(p: PolyDict, q: PolyDict) -> PolyDict:
    out: PolyDict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            nc = out.get(e, ZERO) + c1 * c2
            if nc == 0:
                out.pop(e, None)
            else:
                out[e] = nc
    return out


def poly_linear(nvars: int, coeffs: Sequence, const=0) -> PolyDict:
    """The linear polynomial sum_i coeffs[i] * x_i + const."""
    out = poly_const(nvars, const)
    for i, c in enumerate(coeffs):
        c = QQ(c)
        if c != 0:
            e = tuple(1 if j == i else 0 for j in range(nvars))
            out = poly_add(out, {e: c})
    return out


def poly_pow(p: PolyDict, n: int, nvars: int) -> PolyDict:
    out = poly_const(nvars, 1)
    for _ in range(n):
        out = poly_mul(out, p)
    return out


def poly_shift_last_var(p: PolyDict, shifts: Sequence) -> PolyDict:
    """Substitute x_i -> x_i - shifts[i] * x_last for all non-last variables.

    This is the equivariant-parameter shift f(lam, z) -> f(lam - k z, z): the
    last variable plays the role of z.
    """
    if not p:
        return {}
    nvars = len(next(iter(p)))
    out: PolyDict = {}
    lasts = list(shifts) + [0] * (nvars - 1 - len(shifts))
    for e, c in p.items():
        term = poly_const(nvars, c)
        for i, ei in enumerate(e[:-1]):
            if ei == 0:
                continue
            base = poly_linear(nvars, [1 if j == i else 0 for j in range(nvars - 1)])
            zmon = tuple(1 if j == nvars - 1 else 0 for j in range(nvars))
            base = poly_add(base, {zmon: QQ(-lasts[i])}) if lasts[i] else base
            term = poly_mul(term, poly_pow(base, ei, nvars))
        if e[-1]:
            zmon = tuple(e[-1] if j == nvars - 1 else 0 for j in range(nvars))
            term = poly_mul(term, {zmon: ONE})
        out = poly_add(out, term)
    return out
