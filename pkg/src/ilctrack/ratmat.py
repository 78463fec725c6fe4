"""Rational transfer-function matrices.

A `RationalMatrix` stores one polynomial fraction per entry, denominators
normalized to be monic.  No symbolic pole/zero cancellation is attempted:
rational identities are checked by randomized pointwise evaluation at complex
probe points, and the closed-form frequency-domain objects built on top of
these matrices are evaluated lazily through linear solves rather than being
materialized (see the trackability and ilc modules).
"""

from dataclasses import dataclass

import numpy as np

from .poly import Poly, matrix_rank

__all__ = [
    "RationalFunction",
    "RationalMatrix",
    "PropernessClass",
    "PoleAtPointError",
    "probe_points",
]


class PoleAtPointError(ValueError):
    """Raised when an evaluation point sits on (or too near) a pole."""


class RationalFunction:
    """A single polynomial fraction num/den with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        num = num if isinstance(num, Poly) else Poly(num)
        den = den if isinstance(den, Poly) else Poly(den)
        if den.is_zero:
            raise ZeroDivisionError("identically zero denominator")
        den, lead = den.monic()
        num = (1.0 / lead) * num
        if num.is_zero:
            den = Poly([1.0])
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalFunction is immutable")

    @property
    def is_zero(self):
        return self.num.is_zero

    def __call__(self, s):
        d = self.den(s)
        bound = sum(abs(c) * max(1.0, abs(s)) ** k for k, c in enumerate(self.den.coeffs))
        if abs(d) <= 1e-12 * (1.0 + bound):
            raise PoleAtPointError(f"denominator vanishes at s = {s}")
        return self.num(s) / d

    def __add__(self, other):
        other = _as_rf(other)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_rf(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return RationalFunction(other * self.num, self.den)
        other = _as_rf(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __rmul__(self, other):
        return self.__mul__(other)

    def times_s(self):
        return RationalFunction(self.num * Poly((0.0, 1.0)), self.den)

    def over_s(self):
        return RationalFunction(self.num, self.den * Poly((0.0, 1.0)))

    def derivative(self):
        """d/ds of the fraction via the quotient rule."""
        return RationalFunction(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    @property
    def relative_degree(self):
        """den degree minus num degree (large positive for the zero fraction)."""
        if self.is_zero:
            return 10**9
        return self.den.degree - self.num.degree

    def __repr__(self):
        return f"RationalFunction({self.num!r} / {self.den!r})"


def _as_rf(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, (int, float)):
        return RationalFunction(Poly([float(x)]))
    if isinstance(x, Poly):
        return RationalFunction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational function")


@dataclass(frozen=True)
class PropernessClass:
    """Properness verdict of a rational matrix.

    ``kind`` is one of ``"improper"``, ``"proper"``, ``"strictly_proper"``;
    ``limit`` is the matrix limit for s -> infinity (None when improper).
    """

    kind: str
    limit: object

    @property
    def is_strictly_proper(self):
        return self.kind == "strictly_proper"

    @property
    def is_proper(self):
        return self.kind in ("proper", "strictly_proper")


class RationalMatrix:
    """Matrix of polynomial fractions, row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows, cols, entries):
        entries = tuple(_as_rf(e) for e in entries)
        if len(entries) != rows * cols:
            raise ValueError("entry count does not match rows*cols")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMatrix is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_rows(cls, rows):
        """Build from nested lists; entries may be (num, den) pairs,
        coefficient lists (polynomials), scalars, or RationalFunction."""
        r = len(rows)
        c = len(rows[0]) if r else 0
        ent = []
        for row in rows:
            if len(row) != c:
                raise ValueError("ragged rows")
            for e in row:
                if isinstance(e, tuple) and len(e) == 2:
                    ent.append(RationalFunction(Poly(e[0]), Poly(e[1])))
                elif isinstance(e, (list,)):
                    ent.append(RationalFunction(Poly(e)))
                else:
                    ent.append(_as_rf(e))
        return cls(r, c, ent)

    @classmethod
    def constant(cls, m):
        m = np.atleast_2d(np.asarray(m, dtype=float))
        return cls(m.shape[0], m.shape[1], [RationalFunction(Poly([v])) for v in m.ravel()])

    @classmethod
    def identity(cls, n):
        return cls.constant(np.eye(n))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, [RationalFunction(Poly())] * (rows * cols))

    # -- basic access ------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def __call__(self, s):
        """Entrywise evaluation at a complex point (rm_eval)."""
        out = np.empty((self.rows, self.cols), dtype=complex)
        for i in range(self.rows):
            for j in range(self.cols):
                try:
                    out[i, j] = self[i, j](s)
                except PoleAtPointError as exc:
                    raise PoleAtPointError(f"entry ({i}, {j}): {exc}") from None
        return out

    # -- algebra (rm_algebra) ----------------------------------------------

    def transpose(self):
        ent = [self[i, j] for j in range(self.cols) for i in range(self.rows)]
        return RationalMatrix(self.cols, self.rows, ent)

    @property
    def T(self):
        return self.transpose()

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("dimension mismatch in rational matrix sum")
        return RationalMatrix(
            self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)]
        )

    def __sub__(self, other):
        if self.shape != other.shape:
            raise ValueError("dimension mismatch in rational matrix difference")
        return RationalMatrix(
            self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)]
        )

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in rational matrix product")
        ent = []
        for i in range(self.rows):
            for j in range(other.cols):
                acc = RationalFunction(Poly())
                for k in range(self.cols):
                    a, b = self[i, k], other[k, j]
                    if a.is_zero or b.is_zero:
                        continue
                    acc = acc + a * b
                ent.append(acc)
        return RationalMatrix(self.rows, other.cols, ent)

    def times_s(self):
        """Multiply every entry by s (needed for gains of the form s*(..))."""
        return RationalMatrix(self.rows, self.cols, [e.times_s() for e in self.entries])

    def over_s(self):
        """Divide every entry by s."""
        return RationalMatrix(self.rows, self.cols, [e.over_s() for e in self.entries])

    def select_columns(self, idx):
        ent = [self[i, j] for i in range(self.rows) for j in idx]
        return RationalMatrix(self.rows, len(idx), ent)

    def select_rows(self, idx):
        ent = [self[i, j] for i in idx for j in range(self.cols)]
        return RationalMatrix(len(idx), self.cols, ent)

    # -- classification ----------------------------------------------------

    def classify(self):
        """Properness class with the s -> infinity limit (rm_classify)."""
        limit = np.zeros((self.rows, self.cols))
        improper = False
        for i in range(self.rows):
            for j in range(self.cols):
                e = self[i, j]
                if e.is_zero:
                    continue
                gap = e.den.degree - e.num.degree
                if gap < 0:
                    improper = True
                elif gap == 0:
                    limit[i, j] = e.num.coeffs[-1]  # den is monic
        if improper:
            return PropernessClass("improper", None)
        if np.all(limit == 0.0):
            return PropernessClass("strictly_proper", limit)
        return PropernessClass("proper", limit)

    def markov(self, count):
        """First ``count`` Markov parameters of a strictly proper matrix.

        These are the coefficients of the expansion in powers of 1/s,
        computed entrywise by long division; element 0 is the leading
        Markov parameter (the limit of s*G(s)).
        """
        cls = self.classify()
        if not cls.is_strictly_proper:
            raise ValueError(f"Markov expansion requires a strictly proper matrix, got {cls.kind}")
        out = [np.zeros((self.rows, self.cols)) for _ in range(count)]
        for i in range(self.rows):
            for j in range(self.cols):
                e = self[i, j]
                if e.is_zero:
                    continue
                r = e.den.degree
                n = [e.num.coeff(k) for k in range(r)]
                d = [e.den.coeff(k) for k in range(r + 1)]  # d[r] == 1
                m = []
                for l in range(count):
                    v = n[r - 1 - l] if 0 <= r - 1 - l < r else 0.0
                    for k in range(max(0, l - r), l):
                        v -= m[k] * d[r - l + k]
                    m.append(v)
                for l in range(count):
                    out[l][i, j] = m[l]
        return out

    def has_relative_degree_one(self):
        """True iff the leading Markov parameter has full rank."""
        phi0 = self.markov(1)[0]
        return matrix_rank(phi0) == min(self.rows, self.cols)

    # -- randomized nonsingularity / pointwise solves ----------------------

    def is_nonsingular(self, seed=0, probes=8):
        """Whether det(G(s)) is not identically zero as a rational function.

        Tests the determinant at ``probes`` random complex points (relative
        tolerance 1e-8), re-sampling points that hit poles; fails after 64
        attempts if every draw lands on a pole.
        """
        if self.rows != self.cols:
            raise ValueError("nonsingularity test requires a square matrix")
        rng = np.random.default_rng(seed)
        checked = 0
        attempts = 0
        ok = True
        while checked < probes:
            if attempts >= 64:
                raise PoleAtPointError("all probe points hit poles after 64 attempts")
            s0 = _draw_probe(rng)
            attempts += 1
            try:
                m = self(s0)
            except PoleAtPointError:
                continue
            checked += 1
            sv = np.linalg.svd(m, compute_uv=False)
            if sv[0] == 0.0 or sv[-1] <= 1e-8 * sv[0]:
                ok = False
        return ok

    def solve_pointwise(self, rhs, s0):
        """Evaluate ``self(s0)**-1 @ rhs(s0)`` through a linear solve.

        ``rhs`` may be a RationalMatrix or an already evaluated ndarray.
        """
        if self.rows != self.cols:
            raise ValueError("pointwise solve requires a square matrix")
        a = self(s0)
        b = rhs(s0) if isinstance(rhs, RationalMatrix) else np.asarray(rhs)
        sv = np.linalg.svd(a, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
            raise PoleAtPointError(f"matrix numerically singular at s = {s0}")
        return np.linalg.solve(a, b)

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols})"


def _draw_probe(rng):
    r = rng.uniform(0.5, 20.0)
    for _ in range(100):
        th = rng.uniform(0.0, 2.0 * np.pi)
        s0 = r * complex(np.cos(th), np.sin(th))
        if abs(s0.imag) >= 0.1:
            return s0
    return complex(0.0, r)


def probe_points(count, seed=0):
    """Seeded probe points from the annulus 0.5 <= |s| <= 20, off the real axis."""
    rng = np.random.default_rng(seed)
    return [_draw_probe(rng) for _ in range(count)]
