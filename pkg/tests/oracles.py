"""Independent reference implementations used to cross-check the library.

Everything here is pure Python over int lists, written without the package's
linear algebra so the two routes stay independent.
"""


def mod_inv(a, q):
    a %= q
    if a == 0:
        raise ZeroDivisionError
    t, new_t, r, new_r = 0, 1, q, a
    while new_r:
        quo = r // new_r
        t, new_t = new_t, t - quo * new_t
        r, new_r = new_r, r - quo * new_r
    if r != 1:
        raise ValueError("not invertible")
    return t % q


def dot(a, b, q):
    return sum(int(x) * int(y) for x, y in zip(a, b)) % q


def echelon(rows, q):
    """Row echelon form by plain elimination; returns (rows, pivot_cols)."""
    rows = [[int(x) % q for x in r] for r in rows]
    if not rows:
        return [], []
    cols = len(rows[0])
    pivots = []
    r = 0
    for c in range(cols):
        pr = next((i for i in range(r, len(rows)) if rows[i][c] % q), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = mod_inv(rows[r][c], q)
        rows[r] = [x * inv % q for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(x - f * y) % q for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return rows, pivots


def rank(rows, q):
    return len(echelon(rows, q)[1])


def in_span(rows, v, q):
    """Is v in the row space of rows?"""
    red, pivots = echelon(rows, q)
    v = [int(x) % q for x in v]
    for row, pc in zip(red, pivots):
        if v[pc]:
            f = v[pc]
            v = [(x - f * y) % q for x, y in zip(v, row)]
    return not any(v)


def matvec(M, v, q):
    return [dot(row, v, q) for row in M]


def group_hash(P, gens, data, q):
    acc = 1
    for g, x in zip(gens, data):
        acc = acc * pow(int(g), int(x) % q, P) % P
    return acc
