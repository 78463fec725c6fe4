"""Analytic trajectory expressions with exact rational Laplace transforms.

Trajectories are finite sums of terms ``c * t**m * exp(a*t) * cos(w*t + phi)``.
This basis is closed under differentiation and every term has a rational
Laplace transform, which is what makes the frequency-domain trackability
criteria mechanically checkable.  Arbitrary sampled trajectories can still be
simulated, but the trackability checks refuse them (see trackability module).
"""

from dataclasses import dataclass

import numpy as np

from .poly import Poly
from .ratmat import RationalFunction, RationalMatrix

__all__ = [
    "Term",
    "SignalExpr",
    "ExogenousInput",
    "signal_vector",
    "constant_signal",
    "zero_signal",
    "transform_vector",
    "sample_exprs",
    "derivative_vector",
]


@dataclass(frozen=True)
class Term:
    """One basis term ``c * t**m * exp(a*t) * cos(w*t + phi)``."""

    c: float
    m: int = 0
    a: float = 0.0
    omega: float = 0.0
    phi: float = 0.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        v = self.c * np.exp(self.a * t) * np.cos(self.omega * t + self.phi)
        if self.m:
            v = v * t**self.m
        return v

    def laplace(self):
        """Exact transform, assembled from the shifted cosine transform."""
        ca, sa = np.cos(self.phi), np.sin(self.phi)
        if self.omega == 0.0:
            # cos collapses to the constant cos(phi): L[exp(a t)] = 1/(s-a)
            f = RationalFunction(Poly([ca]), Poly([-self.a, 1.0]))
        else:
            # L[exp(a t) cos(w t + phi)]
            #   = (cos(phi) (s-a) - sin(phi) w) / ((s-a)^2 + w^2)
            num = Poly([-ca * self.a - sa * self.omega, ca])
            den = Poly([self.a**2 + self.omega**2, -2.0 * self.a, 1.0])
            f = RationalFunction(num, den)
        for _ in range(self.m):  # L[t^m f] = (-1)^m d^m F/ds^m
            f = -1.0 * f.derivative()
        return self.c * f

    def derivative_terms(self):
        out = []
        if self.m:
            out.append(Term(self.c * self.m, self.m - 1, self.a, self.omega, self.phi))
        if self.a:
            out.append(Term(self.c * self.a, self.m, self.a, self.omega, self.phi))
        if self.omega:
            # d/dt cos = -w sin = w cos(. + pi/2)
            out.append(
                Term(self.c * self.omega, self.m, self.a, self.omega, self.phi + np.pi / 2)
            )
        return out


class SignalExpr:
    """A scalar trajectory: finite sum of `Term` values."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        terms = tuple(t if isinstance(t, Term) else Term(**t) for t in terms)
        object.__setattr__(self, "terms", tuple(t for t in terms if t.c != 0.0))

    def __setattr__(self, name, value):
        raise AttributeError("SignalExpr is immutable")

    @classmethod
    def constant(cls, c):
        return cls([Term(float(c))])

    @classmethod
    def sine(cls, amplitude, omega):
        return cls([Term(float(amplitude), omega=float(omega), phi=-np.pi / 2)])

    @property
    def is_zero(self):
        return not self.terms

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.zeros_like(t)
        for term in self.terms:
            acc = acc + term.value(t)
        return acc if acc.ndim else float(acc)

    def derivative(self):
        out = []
        for term in self.terms:
            out.extend(term.derivative_terms())
        return SignalExpr(out)

    def laplace(self):
        acc = RationalFunction(Poly())
        for term in self.terms:
            acc = acc + term.laplace()
        return acc

    def __add__(self, other):
        return SignalExpr(self.terms + other.terms)

    def __eq__(self, other):
        if not isinstance(other, SignalExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"SignalExpr({len(self.terms)} terms)"


def signal_vector(term_lists):
    """Build a tuple of SignalExpr from per-channel term collections."""
    return tuple(
        ch if isinstance(ch, SignalExpr) else SignalExpr(ch) for ch in term_lists
    )


def constant_signal(values):
    """Constant vector trajectory."""
    return tuple(SignalExpr.constant(v) for v in np.atleast_1d(values))


def zero_signal(dims):
    return tuple(SignalExpr() for _ in range(dims))


def derivative_vector(exprs):
    return tuple(f.derivative() for f in exprs)


def transform_vector(exprs):
    """Laplace transform of a vector trajectory as a column RationalMatrix."""
    return RationalMatrix(len(exprs), 1, [f.laplace() for f in exprs])


def sample_exprs(exprs, grid):
    """Pointwise evaluation of a vector trajectory on a grid (expr_sample)."""
    from .simulate import SampledSignal

    t = grid.times()
    vals = np.column_stack([f(t) for f in exprs]) if exprs else np.zeros((grid.N, 0))
    return SampledSignal(grid, vals)


class ExogenousInput:
    """Additional plant input d(t) = d0*delta(t) + dhat(t).

    ``d0`` is the impulsive part (a plain vector) and ``dhat`` a vector of
    SignalExpr for the regular part; the transform is then d0 + Dhat(s) with
    Dhat strictly proper, which is verified at construction.
    """

    __slots__ = ("d0", "dhat")

    def __init__(self, d0, dhat=None):
        d0 = np.atleast_1d(np.asarray(d0, dtype=float))
        if dhat is None:
            dhat = zero_signal(len(d0))
        dhat = signal_vector(dhat)
        if len(dhat) != len(d0):
            raise ValueError("impulsive and regular parts disagree in dimension")
        cls = transform_vector(dhat).classify()
        if not cls.is_strictly_proper:
            raise ValueError("regular part of the exogenous input must have a strictly proper transform")
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "dhat", dhat)

    def __setattr__(self, name, value):
        raise AttributeError("ExogenousInput is immutable")

    @classmethod
    def zero(cls, dims):
        return cls(np.zeros(dims))

    @property
    def dims(self):
        return len(self.d0)

    @property
    def is_zero(self):
        return not np.any(self.d0) and all(f.is_zero for f in self.dhat)

    def transform_regular(self):
        return transform_vector(self.dhat)

    def eval(self, s0):
        """D(s0) = d0 + Dhat(s0) as a column vector."""
        return self.d0.reshape(-1, 1) + self.transform_regular()(s0)
