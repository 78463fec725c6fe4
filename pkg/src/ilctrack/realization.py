"""State-space realizations of proper rational matrices.

`realize` builds a block realization, one controllable-canonical block per
input column on that column's least common denominator.  Realizations are
deliberately allowed to be non-minimal (shared dynamics get duplicated);
the systems here are small and minimality is irrelevant to simulation.

The module also carries the composition algebra (series, transpose, inverse,
multiply-by-s) used to turn the closed-form frequency-domain limits into
simulatable systems without ever inverting a rational matrix symbolically.
"""

import numpy as np

from .poly import Poly
from .ratmat import RationalMatrix, probe_points

__all__ = [
    "StateSpace",
    "RealizationError",
    "realize",
    "markov_from_ss",
    "series",
    "transpose_ss",
    "inverse",
    "times_s",
    "static_gain",
]


class RealizationError(RuntimeError):
    """A constructed realization failed its transfer-function probe check."""


class StateSpace:
    """Continuous-time LTI system (A, B, C, D)."""

    __slots__ = ("A", "B", "C", "D")

    def __init__(self, A, B, C, D=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.asarray(B, dtype=float)
        C = np.asarray(C, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.ndim != 2:
            B = B.reshape(n, -1) if B.size else np.zeros((n, 0))
        if C.ndim != 2:
            C = C.reshape(-1, n) if C.size else np.zeros((0, n))
        if B.shape[0] != n or C.shape[1] != n:
            raise ValueError("B/C dimensions inconsistent with A")
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        D = np.asarray(D, dtype=float).reshape(C.shape[0], B.shape[1])
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    def __setattr__(self, name, value):
        raise AttributeError("StateSpace is immutable")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def q(self):
        return self.C.shape[0]

    def eval(self, s0):
        """Transfer function C (s0 I - A)^-1 B + D at one complex point."""
        if self.n == 0:
            return self.D.astype(complex)
        x = np.linalg.solve(s0 * np.eye(self.n) - self.A, self.B.astype(complex))
        return self.C @ x + self.D

    def __repr__(self):
        return f"StateSpace(n={self.n}, p={self.p}, q={self.q})"


def static_gain(K):
    """Zero-state system y = K u."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    return StateSpace(np.zeros((0, 0)), np.zeros((0, K.shape[1])), np.zeros((K.shape[0], 0)), K)


def _column_lcd(dens):
    """Least common denominator by product of distinct monic denominators.

    Denominators that agree coefficient-wise (within a relative tolerance)
    are merged; beyond that, no root-level factor sharing is attempted, so
    the result may overstate the true LCM.  That only costs extra states.
    """
    distinct = []
    for d in dens:
        for seen in distinct:
            if seen.degree == d.degree and all(
                abs(a - b) <= 1e-9 * (1.0 + abs(a) + abs(b))
                for a, b in zip(seen.coeffs, d.coeffs)
            ):
                break
        else:
            distinct.append(d)
    lcd = Poly([1.0])
    for d in distinct:
        lcd = lcd * d
    return lcd


def realize(g):
    """State-space realization of a proper or strictly proper RationalMatrix.

    Each input column gets a controllable-canonical block built on the
    column's least common denominator; D is the matrix limit at infinity.
    The construction is verified against the source matrix at 8 probe
    points and fails loudly if they disagree (a construction bug, not a
    user error).
    """
    cls = g.classify()
    if not cls.is_proper:
        raise ValueError("cannot realize an improper rational matrix")
    D = cls.limit
    q, p = g.rows, g.cols

    blocks_A, blocks_B, blocks_C = [], [], []
    for j in range(p):
        col = []
        for i in range(q):
            e = g[i, j]
            num = e.num - D[i, j] * e.den  # strictly proper part
            if not num.is_zero:
                col.append((i, num, e.den))
        if not col:
            continue
        lcd = _column_lcd([den for _, _, den in col])
        d = lcd.degree
        if d == 0:
            continue
        A = np.zeros((d, d))
        A[:-1, 1:] = np.eye(d - 1)
        A[-1, :] = [-lcd.coeff(k) for k in range(d)]
        b = np.zeros((d, 1))
        b[-1, 0] = 1.0
        C = np.zeros((q, d))
        for i, num, den in col:
            scaled = num * lcd.exact_div(den)
            if scaled.degree >= d:
                raise RealizationError("numerator degree reached the column LCD degree")
            C[i, : len(scaled.coeffs)] = scaled.coeffs
        blocks_A.append(A)
        blocks_B.append((j, b))
        blocks_C.append(C)

    if blocks_A:
        n = sum(a.shape[0] for a in blocks_A)
        A = np.zeros((n, n))
        B = np.zeros((n, p))
        C = np.zeros((q, n))
        at = 0
        for a, (j, b), c in zip(blocks_A, blocks_B, blocks_C):
            d = a.shape[0]
            A[at : at + d, at : at + d] = a
            B[at : at + d, j : j + 1] = b
            C[:, at : at + d] = c
            at += d
        ss = StateSpace(A, B, C, D)
    else:
        ss = StateSpace(np.zeros((0, 0)), np.zeros((0, p)), np.zeros((q, 0)), D)

    for s0 in probe_points(8, seed=7):
        want = g(s0)
        got = ss.eval(s0)
        scale = 1.0 + np.max(np.abs(want))
        if np.max(np.abs(want - got)) > 1e-6 * scale:
            raise RealizationError(
                f"realization probe check failed at s = {s0}"
            )
    return ss


def markov_from_ss(ss, count):
    """Markov parameters C A^j B for j = 0..count-1."""
    out = []
    m = ss.B
    for _ in range(count):
        out.append(ss.C @ m)
        m = ss.A @ m
    return out


# -- composition algebra -------------------------------------------------


def series(first, second):
    """System computing ``second(first(u))`` (transfer product G2(s) G1(s))."""
    if second.p != first.q:
        raise ValueError("dimension mismatch in series composition")
    n1, n2 = first.n, second.n
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = first.A
    A[n1:, n1:] = second.A
    A[n1:, :n1] = second.B @ first.C
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpace(A, B, C, D)


def transpose_ss(ss):
    """Realization of the transposed transfer matrix G(s)^T."""
    return StateSpace(ss.A.T, ss.C.T, ss.B.T, ss.D.T)


def inverse(ss):
    """Realization of G(s)^-1 for square G with invertible feedthrough."""
    if ss.q != ss.p:
        raise ValueError("inverse requires a square system")
    Di = np.linalg.inv(ss.D)
    if ss.n == 0:
        return static_gain(Di)
    return StateSpace(ss.A - ss.B @ Di @ ss.C, ss.B @ Di, -Di @ ss.C, Di)


def times_s(ss):
    """Realization of s*G(s) for strictly proper G (zero feedthrough)."""
    if np.any(ss.D):
        raise ValueError("multiplication by s requires zero feedthrough")
    return StateSpace(ss.A, ss.B, ss.C @ ss.A, ss.C @ ss.B)
