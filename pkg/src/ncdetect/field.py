"""Prime-field arithmetic and dense linear algebra over F_q.

Two storage backends sit behind one interface. Fields with q <= _WORD_MODULUS_MAX
keep vectors and matrices as int64 numpy arrays: every intermediate product a*b
with a, b < q then fits in a signed 64-bit word, so elementwise multiply followed
by %, or multiply-mod-accumulate, is exact. Larger moduli fall back to object
arrays of Python ints, same code paths, arbitrary precision.

Multiplication and exponentiation counts are accumulated in COUNTER so callers
can cross-check analytic cost formulas against executed operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np

# floor(sqrt(2^63 - 1)): largest modulus whose products fit in int64
_WORD_MODULUS_MAX = 3_037_000_499


class FieldError(Exception):
    pass


class ZeroInverseError(FieldError, ZeroDivisionError):
    """Inverse of zero requested."""


class ModulusMismatchError(FieldError):
    """Operands belong to fields with different moduli."""


class SingularSystemError(FieldError):
    """Linear system has no unique solution (rank-deficient)."""


class InconsistentSystemError(FieldError):
    """Linear system has no solution at all."""


@dataclass
class OpCounter:
    """Running totals of instrumented field multiplications and group exponentiations."""

    mults: int = 0
    exps: int = 0

    def reset(self):
        self.mults = 0
        self.exps = 0

    def snapshot(self):
        return (self.mults, self.exps)


COUNTER = OpCounter()


def is_prime(n) -> bool:
    return bool(gmpy2.is_prime(gmpy2.mpz(n), 40))


def next_prime(n) -> int:
    return int(gmpy2.next_prime(gmpy2.mpz(n)))


def powmod(base, exp, mod) -> int:
    """Modular exponentiation, counted as one group exponentiation."""
    COUNTER.exps += 1
    return int(gmpy2.powmod(base, exp, mod))


def invert(a, mod) -> int:
    if a % mod == 0:
        raise ZeroInverseError(f"no inverse of 0 mod {mod}")
    return int(gmpy2.invert(a, mod))


def rand_bits(rng: np.random.Generator, bits: int) -> int:
    """Uniform integer in [0, 2^bits) from a numpy generator (deterministic per seed)."""
    nbytes = (bits + 7) // 8
    val = int.from_bytes(rng.bytes(nbytes), "big")
    return val >> (8 * nbytes - bits)


def rand_below(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) by rejection on bit blocks."""
    bits = bound.bit_length()
    while True:
        val = rand_bits(rng, bits)
        if val < bound:
            return val


def random_prime(rng: np.random.Generator, bits: int) -> int:
    """Random prime with exactly `bits` bits."""
    if bits < 2:
        raise ValueError("need bits >= 2")
    while True:
        cand = rand_bits(rng, bits) | (1 << (bits - 1)) | 1
        if is_prime(cand):
            return cand


class PrimeField:
    """Arithmetic over F_q for prime q, with vectorized numpy representations."""

    __slots__ = ("q", "dtype")

    def __init__(self, q: int):
        q = int(q)
        if q < 2 or not is_prime(q):
            raise ValueError(f"modulus must be prime, got {q}")
        self.q = q
        self.dtype = np.int64 if q <= _WORD_MODULUS_MAX else object

    def __repr__(self):
        return f"PrimeField({self.q})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self):
        return hash(("PrimeField", self.q))

    @property
    def symbol_bytes(self) -> int:
        """Serialized width of one field element."""
        return (self.q.bit_length() + 7) // 8

    def require_same(self, other: "PrimeField", what: str = "operands"):
        if self.q != other.q:
            raise ModulusMismatchError(
                f"{what} mix moduli {self.q} and {other.q}")

    # -- element and array construction ------------------------------------

    def element(self, x) -> int:
        return int(x) % self.q

    def array(self, values) -> np.ndarray:
        try:
            arr = np.asarray(values, dtype=self.dtype)
        except OverflowError:
            # inputs exceed int64: reduce with Python ints first, then narrow
            arr = np.asarray(values, dtype=object) % self.q
            arr = arr.astype(self.dtype)
        if arr.size == 0:
            return arr.astype(self.dtype)
        return arr % self.q

    def zeros(self, shape) -> np.ndarray:
        if self.dtype is object:
            arr = np.empty(shape, dtype=object)
            arr.fill(0)
            return arr
        return np.zeros(shape, dtype=np.int64)

    def eye(self, size: int) -> np.ndarray:
        arr = self.zeros((size, size))
        for i in range(size):
            arr[i, i] = 1
        return arr

    def random_array(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.dtype is np.int64:
            return rng.integers(0, self.q, size=shape, dtype=np.int64)
        flat_len = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        vals = [rand_below(rng, self.q) for _ in range(flat_len)]
        return np.array(vals, dtype=object).reshape(shape)

    def random_nonzero(self, rng: np.random.Generator, length: int) -> np.ndarray:
        arr = self.random_array(rng, length)
        for i in range(length):
            while arr[i] == 0:
                arr[i] = rand_below(rng, self.q)
        return arr

    # -- scalar / elementwise ops ------------------------------------------

    def add(self, a, b):
        return (a + b) % self.q

    def sub(self, a, b):
        return (a - b) % self.q

    def mul(self, a, b):
        return (a * b) % self.q

    def neg(self, a):
        return (-a) % self.q

    def inv(self, a) -> int:
        return invert(int(a), self.q)

    def pow(self, a, e) -> int:
        a = int(a) % self.q
        e = int(e)
        if e < 0:
            a = self.inv(a)
            e = -e
        return int(gmpy2.powmod(a, e, self.q))

    # -- counted bulk products ---------------------------------------------

    def dot(self, a, b) -> int:
        """Inner product of two vectors; counts len(a) multiplications."""
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape != b.shape:
            raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
        COUNTER.mults += a.shape[0]
        if a.shape[0] == 0:
            return 0
        return int(((a * b) % self.q).sum() % self.q)

    def matvec(self, M, v) -> np.ndarray:
        M = np.asarray(M)
        v = np.asarray(v)
        COUNTER.mults += M.shape[0] * M.shape[1]
        if M.shape[0] == 0 or M.shape[1] == 0:
            return self.zeros(M.shape[0])
        return ((M * v[None, :]) % self.q).sum(axis=1) % self.q

    def matmul(self, A, B) -> np.ndarray:
        """A @ B with per-step reduction so int64 never overflows."""
        A = np.asarray(A)
        B = np.asarray(B)
        if A.shape[1] != B.shape[0]:
            raise ValueError(f"shape mismatch {A.shape} @ {B.shape}")
        COUNTER.mults += A.shape[0] * A.shape[1] * B.shape[1]
        out = self.zeros((A.shape[0], B.shape[1]))
        for k in range(A.shape[1]):
            out = (out + np.outer(A[:, k], B[k, :]) % self.q) % self.q
        return out

    def lincomb(self, coeffs, vectors) -> np.ndarray:
        """Sum of coeffs[i] * vectors[i]; counts len(coeffs) * width multiplications."""
        vectors = np.asarray(vectors)
        coeffs = np.asarray(coeffs)
        COUNTER.mults += vectors.shape[0] * vectors.shape[1]
        if vectors.shape[0] == 0:
            return self.zeros(vectors.shape[1])
        return ((coeffs[:, None] * vectors) % self.q).sum(axis=0) % self.q

    # -- elimination ---------------------------------------------------------

    def rref(self, M) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form.

        Pivoting is deterministic: scan columns left to right, take the first
        nonzero entry at or below the current row. Returns (R, pivot_columns).
        """
        R = self.array(M).copy()
        if R.ndim != 2:
            raise ValueError("need a 2-d matrix")
        rows, cols = R.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r >= rows:
                break
            nz = np.nonzero(R[r:, c])[0]
            if len(nz) == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                R[[r, p]] = R[[p, r]]
            inv = self.inv(R[r, c])
            R[r] = (R[r] * inv) % self.q
            col = R[:, c].copy()
            col[r] = 0
            R = (R - np.outer(col, R[r]) % self.q) % self.q
            pivots.append(c)
            r += 1
        return R, pivots

    def rank(self, M) -> int:
        return len(self.rref(M)[1])

    def reduce_against(self, R, pivots, v) -> np.ndarray:
        """Residual of v after elimination by the rref rows (zero iff v in row space)."""
        w = self.array(v).copy()
        for row, pc in enumerate(pivots):
            if w[pc] != 0:
                w = (w - (w[pc] * R[row]) % self.q) % self.q
        return w

    def in_row_space(self, R, pivots, v) -> bool:
        return not np.any(self.reduce_against(R, pivots, v))

    def null_space_basis(self, M) -> np.ndarray:
        """Basis of {x : M x = 0}, one row per free column of rref(M).

        For the zero (or empty) matrix this is the standard basis. Rows are
        ordered by ascending free-column index, so the output is deterministic.
        """
        M = self.array(M)
        if M.ndim != 2:
            raise ValueError("need a 2-d matrix")
        cols = M.shape[1]
        if M.shape[0] == 0:
            return self.eye(cols)
        R, pivots = self.rref(M)
        free = [c for c in range(cols) if c not in set(pivots)]
        basis = self.zeros((len(free), cols))
        for bi, f in enumerate(free):
            basis[bi, f] = 1
            for row, pc in enumerate(pivots):
                basis[bi, pc] = (-R[row, f]) % self.q
        return basis

    def solve(self, A, b) -> np.ndarray:
        """Unique solution of A x = b.

        Raises InconsistentSystemError when no solution exists and
        SingularSystemError when the solution is not unique.
        """
        A = self.array(A)
        b = self.array(b)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise ValueError(f"bad system shapes {A.shape}, {b.shape}")
        ncols = A.shape[1]
        aug = np.concatenate([A, b[:, None]], axis=1)
        R, pivots = self.rref(aug)
        if ncols in pivots:
            raise InconsistentSystemError("system has no solution")
        if len(pivots) < ncols:
            raise SingularSystemError(
                f"system is underdetermined (rank {len(pivots)} < {ncols} unknowns)")
        x = self.zeros(ncols)
        for row, pc in enumerate(pivots):
            x[pc] = R[row, ncols]
        return x
