"""Independent brute-force oracles used by the test suite.

Nothing here imports the engine's elimination or tensor-algebra code: dense
Fraction matrices and a standalone word algebra keep the oracles on a
separate path from the implementations they check.
"""

from fractions import Fraction


def dense(mat_entries, n_rows, n_cols):
    M = [[Fraction(0)] * n_cols for _ in range(n_rows)]
    for (r, c), v in mat_entries.items():
        M[r][c] = Fraction(v)
    return M


def dense_rank(M):
    M = [row[:] for row in M]
    rank = 0
    n_rows = len(M)
    n_cols = len(M[0]) if M else 0
    for c in range(n_cols):
        piv = None
        for r in range(rank, n_rows):
            if M[r][c]:
                piv = r
                break
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        pv = M[rank][c]
        for r in range(n_rows):
            if r != rank and M[r][c]:
                f = M[r][c] / pv
                for j in range(n_cols):
                    M[r][j] -= f * M[rank][j]
        rank += 1
    return rank


def dense_solve(A, b):
    """Any solution of A x = b or None (augmented elimination)."""
    n_rows = len(A)
    n_cols = len(A[0]) if A else 0
    M = [A[r][:] + [b[r]] for r in range(n_rows)]
    pivots = []
    rank = 0
    for c in range(n_cols):
        piv = None
        for r in range(rank, n_rows):
            if M[r][c]:
                piv = r
                break
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        pv = M[rank][c]
        M[rank] = [v / pv for v in M[rank]]
        for r in range(n_rows):
            if r != rank and M[r][c]:
                f = M[r][c]
                M[r] = [v - f * w for v, w in zip(M[r], M[rank])]
        pivots.append(c)
        rank += 1
    for r in range(rank, n_rows):
        if M[r][n_cols]:
            return None
    x = [Fraction(0)] * n_cols
    for i, c in enumerate(pivots):
        x[c] = M[i][n_cols]
    return x


# --- standalone graded word algebra -----------------------------------

def w_mul(a, b, cap):
    """Concatenation product of dicts word(tuple of (name, deg)) -> Fraction."""
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            if len(w) > cap:
                continue
            out[w] = out.get(w, Fraction(0)) + ca * cb
    return {w: c for w, c in out.items() if c}


def w_add(a, b):
    out = dict(a)
    for w, c in b.items():
        s = out.get(w, Fraction(0)) + c
        if s:
            out[w] = s
        else:
            out.pop(w, None)
    return out


def w_scale(a, c):
    c = Fraction(c)
    return {w: v * c for w, v in a.items()} if c else {}


def w_bracket(a, b, cap):
    """[a,b] = ab - (-1)^{|a||b|} ba per homogeneous word pair."""
    out = {}
    for wa, ca in a.items():
        da = sum(d for _, d in wa)
        for wb, cb in b.items():
            db = sum(d for _, d in wb)
            if len(wa) + len(wb) > cap:
                continue
            out[wa + wb] = out.get(wa + wb, Fraction(0)) + ca * cb
            sgn = Fraction(-1) if (da * db) % 2 == 0 else Fraction(1)
            out[wb + wa] = out.get(wb + wa, Fraction(0)) + sgn * ca * cb
    return {w: c for w, c in out.items() if c}


def w_exp(x, cap):
    out = {(): Fraction(1)}
    power = {(): Fraction(1)}
    fact = 1
    for k in range(1, cap + 1):
        power = w_mul(power, x, cap)
        fact *= k
        out = w_add(out, w_scale(power, Fraction(1, fact)))
        if not power:
            break
    return out


def w_log(u, cap):
    v = {w: c for w, c in u.items() if w}
    out = {}
    power = {(): Fraction(1)}
    for n in range(1, cap + 1):
        power = w_mul(power, v, cap)
        out = w_add(out, w_scale(power, Fraction((-1) ** (n + 1), n)))
        if not power:
            break
    return out


def w_bch(x, y, cap):
    """Independent BCH oracle: log(exp(x) exp(y)) in the word algebra."""
    return w_log(w_mul(w_exp(x, cap), w_exp(y, cap), cap), cap)
