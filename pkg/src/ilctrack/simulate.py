"""Fixed-step time-domain simulation and signal calculus on a shared grid.

`lsim` integrates ``xdot = A x + B u + w`` with classic RK4, interpolating
the sampled input linearly between nodes.  For an LTI system that collapses
to a precomputed affine recurrence, so a whole trajectory is one short loop
of small mat-vecs.  All signals in one experiment share a single uniform
grid covering [0, T] inclusive.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "SampledSignal",
    "lsim",
    "lambda_norm",
    "sup_norm",
    "finite_diff",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid of N nodes covering [0, T] inclusive."""

    T: float
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("grid needs at least two nodes")
        if self.T <= 0:
            raise ValueError("horizon must be positive")

    @property
    def h(self):
        return self.T / (self.N - 1)

    def times(self):
        return np.linspace(0.0, self.T, self.N)


class SampledSignal:
    """Multi-channel signal sampled on a grid; values are (N, dims)."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != grid.N:
            raise ValueError("sample count does not match the grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("signal contains non-finite values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SampledSignal is immutable")

    @classmethod
    def zeros(cls, grid, dims):
        return cls(grid, np.zeros((grid.N, dims)))

    @property
    def dims(self):
        return self.values.shape[1]

    def channel_norms(self):
        """Max-abs across channels at every node."""
        if self.dims == 0:
            return np.zeros(self.grid.N)
        return np.max(np.abs(self.values), axis=1)

    def __add__(self, other):
        self._check(other)
        return SampledSignal(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledSignal(self.grid, self.values - other.values)

    def _check(self, other):
        if other.grid != self.grid or other.dims != self.dims:
            raise ValueError("signals live on different grids or dimensions")

    def to_csv(self, path, names=None):
        """Write ``t`` plus one column per channel, 12 significant digits."""
        if names is None:
            names = [f"y{i + 1}" for i in range(self.dims)]
        if len(names) != self.dims:
            raise ValueError("one name per channel required")
        t = self.grid.times()
        with open(path, "w", newline="\n") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for i in range(self.grid.N):
                row = [f"{t[i]:.12g}"] + [f"{v:.12g}" for v in self.values[i]]
                fh.write(",".join(row) + "\n")

    def __repr__(self):
        return f"SampledSignal(N={self.grid.N}, dims={self.dims})"


def _rk4_matrices(A, h):
    """State propagator and input weights of one RK4 step with linear
    input interpolation: x+ = E x + F0 u_i + F1 u_{i+1} (per input route)."""
    n = A.shape[0]
    I = np.eye(n)
    A2 = A @ A
    A3 = A2 @ A
    E = I + h * A + (h**2 / 2.0) * A2 + (h**3 / 6.0) * A3 + (h**4 / 24.0) * (A2 @ A2)
    F0 = (h / 2.0) * I + (h**2 / 3.0) * A + (h**3 / 8.0) * A2 + (h**4 / 24.0) * A3
    F1 = (h / 2.0) * I + (h**2 / 6.0) * A + (h**3 / 24.0) * A2
    return E, F0, F1


def lsim(ss, u=None, w=None, x0=None, grid=None, return_deriv=False):
    """Simulate ``xdot = A x + B u + w``, ``y = C x + D u`` on a grid.

    Parameters
    ----------
    ss : StateSpace
    u : SampledSignal or None
        Input trajectory; omitted means zero input (then `grid` or `w`
        must supply the grid).
    w : SampledSignal or None
        Full-state additive disturbance (dimension n).
    x0 : array or None
        Initial state (zeros by default).
    return_deriv : bool
        Also return dy/dt computed exactly from the state equation;
        requires zero feedthrough.

    Returns
    -------
    SampledSignal (or a pair of them when ``return_deriv``).
    """
    if u is None and w is None and grid is None:
        raise ValueError("need an input, a disturbance, or an explicit grid")
    grid = grid or (u.grid if u is not None else w.grid)
    if u is None:
        u = SampledSignal.zeros(grid, ss.p)
    if u.grid != grid or (w is not None and w.grid != grid):
        raise ValueError("all signals must share one grid")
    if u.dims != ss.p:
        raise ValueError(f"input has {u.dims} channels, system expects {ss.p}")
    if w is not None and w.dims != ss.n:
        raise ValueError(f"disturbance has {w.dims} channels, state dimension is {ss.n}")
    if x0 is None:
        x0 = np.zeros(ss.n)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != ss.n:
        raise ValueError("initial state has wrong dimension")

    N = grid.N
    U = u.values
    if ss.n == 0:
        Y = U @ ss.D.T
        out = SampledSignal(grid, Y)
        if return_deriv:
            raise ValueError("derivative output requires a strictly proper system")
        return out

    E, F0, F1 = _rk4_matrices(ss.A, grid.h)
    # Per-step affine forcing from the B route and the identity (w) route.
    forcing = np.zeros((N - 1, ss.n))
    if ss.p:
        UB = U @ ss.B.T
        forcing += UB[:-1] @ F0.T + UB[1:] @ F1.T
    if w is not None:
        W = w.values
        forcing += W[:-1] @ F0.T + W[1:] @ F1.T

    X = np.empty((N, ss.n))
    X[0] = x0
    x = x0
    for i in range(N - 1):
        x = E @ x + forcing[i]
        X[i + 1] = x

    Y = X @ ss.C.T
    if ss.p and np.any(ss.D):
        Y = Y + U @ ss.D.T
    out = SampledSignal(grid, Y)
    if not return_deriv:
        return out
    if np.any(ss.D):
        raise ValueError("derivative output requires a strictly proper system")
    Xdot = X @ ss.A.T
    if ss.p:
        Xdot = Xdot + U @ ss.B.T
    if w is not None:
        Xdot = Xdot + w.values
    return out, SampledSignal(grid, Xdot @ ss.C.T)


def lambda_norm(f, lam):
    """sup over the grid of ||f(t)|| * exp(-lam*t), max-abs channel norm."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    weights = np.exp(-lam * f.grid.times())
    return float(np.max(f.channel_norms() * weights))


def sup_norm(f):
    """Max over nodes of the max-abs channel value."""
    if f.dims == 0:
        return 0.0
    return float(np.max(np.abs(f.values)))


def finite_diff(f):
    """Second-order finite differences on the signal's own grid.

    Central differences at interior nodes, one-sided second-order stencils
    at both ends.  Used as the numerical stand-in for derivatives of
    simulated outputs, which have no analytic expression.
    """
    N = f.grid.N
    if N < 3:
        raise ValueError("finite differences need at least three nodes")
    h = f.grid.h
    v = f.values
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return SampledSignal(f.grid, d)
