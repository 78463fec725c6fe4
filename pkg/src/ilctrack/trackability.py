"""Trackability and realizability analysis of desired output trajectories.

A trajectory y_d is trackable when some input makes the plant reproduce it
exactly; realizable when that input is unique.  For plants with at least as
many outputs as inputs (q >= p) trackability is equivalent to the initial
output condition plus a frequency-domain residual identity, checked here at
seeded random probe points.  With more inputs than outputs (q <= p) the
initial condition alone decides, and the solution set is parameterized by
the free input channels.
"""

from dataclasses import dataclass, field

import numpy as np

from .laplace import ExogenousInput, SignalExpr, signal_vector, transform_vector, zero_signal
from .poly import Poly, matrix_rank
from .ratmat import RationalFunction, RationalMatrix, probe_points
from .realization import realize

__all__ = [
    "ConditionError",
    "Plant",
    "TrackabilityVerdict",
    "check_initial_condition",
    "check_trackable_underactuated",
    "check_trackable_overactuated",
    "desired_input_underactuated",
    "projector",
    "statespace_plant",
]

RESIDUAL_TOL = 1e-7
DEFAULT_PROBES = 12


class ConditionError(ValueError):
    """A structural plant condition (C1..C4) is violated."""

    def __init__(self, condition, message):
        self.condition = condition
        super().__init__(f"{condition}: {message}")


class Plant:
    """Frequency-domain plant Y = G1 U + G2 D with validated structure.

    Construction enforces:

    * C1 - G1 and G2 strictly proper;
    * C2 - the exogenous input decomposes as an impulsive vector plus a
      regular part with strictly proper transform (zero is allowed);
    * C3 - relative degree one, i.e. the leading Markov parameter of G1
      has full rank;
    * C4 - for q <= p, some column permutation makes the leading q x q
      block of that Markov parameter nonsingular (the permutation found is
      stored and used by all block formulas).

    An optional native state-space realization can be attached; the
    simulator then integrates it directly instead of realizing G1/G2.
    """

    def __init__(self, g1, g2, exo=None, native=None):
        if g2.rows != g1.rows:
            raise ValueError("G1 and G2 must share the output dimension")
        self.g1 = g1
        self.g2 = g2
        self.q = g1.rows
        self.p = g1.cols
        self.m = g2.cols
        self.exo = exo if exo is not None else ExogenousInput.zero(self.m)
        if self.exo.dims != self.m:
            raise ValueError("exogenous input dimension does not match G2")
        self.native = native

        c1 = g1.classify()
        if not c1.is_strictly_proper:
            raise ConditionError("C1", "G1 is not strictly proper")
        c2 = g2.classify()
        if not c2.is_strictly_proper:
            raise ConditionError("C1", "G2 is not strictly proper")
        # C2 is enforced by the ExogenousInput type itself; re-derive for a
        # named diagnostic in case a raw object sneaks through.
        if not self.exo.transform_regular().classify().is_strictly_proper:
            raise ConditionError("C2", "regular exogenous part is not strictly proper")

        self.phi1_0 = g1.markov(1)[0]
        self.phi2_0 = g2.markov(1)[0]
        if matrix_rank(self.phi1_0) < min(self.q, self.p):
            raise ConditionError("C3", "leading Markov parameter of G1 is rank deficient")

        self.permutation = None
        if self.q <= self.p:
            self.permutation = _leading_block_permutation(self.phi1_0)
            if self.permutation is None:
                raise ConditionError(
                    "C4", "no column permutation yields a nonsingular leading block"
                )

        self._g1_ss = None
        self._g2_ss = None

    # Realizations are cached; they are pure functions of the matrices.
    def g1_ss(self):
        if self._g1_ss is None:
            self._g1_ss = realize(self.g1)
        return self._g1_ss

    def g2_ss(self):
        if self._g2_ss is None:
            self._g2_ss = realize(self.g2)
        return self._g2_ss

    def rhs_eval(self, yd_transform, s0):
        """R(s0) = Y_d(s0) - G2(s0) D(s0) as a column vector."""
        r = yd_transform(s0)
        if not self.exo.is_zero:
            r = r - self.g2(s0) @ self.exo.eval(s0)
        return r

    def initial_output(self):
        """y_k(0) = Phi2(0) d0, identical across iterations."""
        return self.phi2_0 @ self.exo.d0

    def __repr__(self):
        return f"Plant(q={self.q}, p={self.p}, m={self.m})"


def _leading_block_permutation(phi0):
    """Column order whose first q columns form a well-conditioned block.

    Greedy pivoting on the columns of the leading Markov parameter; returns
    the identity order when it already works, None when no choice of q
    columns is nonsingular.
    """
    q, p = phi0.shape
    ident = tuple(range(p))
    lead = phi0[:, :q]
    sv = np.linalg.svd(lead, compute_uv=False)
    if sv[0] > 0 and sv[-1] > 1e-10 * sv[0] * q:
        return ident
    # QR with column pivoting, greedy residual-norm choice.
    remaining = list(range(p))
    chosen = []
    basis = np.zeros((q, 0))
    for _ in range(q):
        best, best_norm = None, 0.0
        for j in remaining:
            col = phi0[:, j]
            if basis.shape[1]:
                proj = basis @ np.linalg.lstsq(basis, col, rcond=None)[0]
                res = np.linalg.norm(col - proj)
            else:
                res = np.linalg.norm(col)
            if res > best_norm:
                best, best_norm = j, res
        if best is None or best_norm <= 1e-10 * max(1.0, np.linalg.norm(phi0)):
            return None
        chosen.append(best)
        remaining.remove(best)
        basis = phi0[:, chosen]
    perm = tuple(chosen + remaining)
    lead = phi0[:, perm[:q]]
    sv = np.linalg.svd(lead, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= 1e-10 * sv[0] * q:
        return None
    return perm


@dataclass
class TrackabilityVerdict:
    """Outcome of a trackability check.

    ``witness`` evaluates the desired input U_d at a complex point (for
    q >= p the unique solution; for q <= p the solution-set member selected
    by the supplied free channels).  ``residual`` is the max normalized
    probe residual of the range identity, defined only for q >= p.
    """

    trackable: bool
    realizable: bool
    initial_condition_ok: bool
    residual: float | None
    witness: object
    probes_used: int
    permutation: tuple | None = None
    free_channels: int = 0

    def to_dict(self):
        return {
            "trackable": self.trackable,
            "realizable": self.realizable,
            "initial_condition_ok": self.initial_condition_ok,
            "residual": self.residual,
            "probes_used": self.probes_used,
            "permutation": list(self.permutation) if self.permutation else None,
            "free_channels": self.free_channels,
        }


def _require_analytic(yd):
    if not (isinstance(yd, tuple) and all(isinstance(f, SignalExpr) for f in yd)):
        raise TypeError(
            "trackability checks need an analytic trajectory (tuple of "
            "SignalExpr with rational Laplace transforms); sampled-only "
            "trajectories can be simulated but their trackability cannot "
            "be decided by the frequency-domain criteria"
        )


def check_initial_condition(plant, yd):
    """Whether y_d(0) equals the plant's (iteration-independent) y_k(0)."""
    _require_analytic(tuple(yd))
    yd0 = np.array([f(0.0) for f in yd])
    y0 = plant.initial_output()
    return bool(np.max(np.abs(yd0 - y0), initial=0.0) <= 1e-9 * (1.0 + np.max(np.abs(yd0), initial=0.0)))


def projector(plant, s0):
    """Range projector complement P(s0) = I - G1 (G1^T G1)^-1 G1^T at a point."""
    g = plant.g1(s0)
    m = g.T @ g
    x = np.linalg.solve(m, g.T)
    return np.eye(plant.q) - g @ x


def check_trackable_underactuated(plant, yd, seed=0, probes=DEFAULT_PROBES):
    """Trackability for q >= p via the range-residual identity.

    The trajectory is trackable iff the initial condition holds and the
    projected residual P(s)[Y_d(s) - G2(s) D(s)] vanishes; the identity is
    tested at seeded random probe points with relative tolerance 1e-7.
    Trackable and realizable coincide in this regime.
    """
    yd = signal_vector(yd)
    _require_analytic(yd)
    if plant.q < plant.p:
        raise ValueError("underactuated check requires q >= p")
    if len(yd) != plant.q:
        raise ValueError("trajectory dimension does not match the plant output")

    ydt = transform_vector(yd)
    ic_ok = check_initial_condition(plant, yd)

    residual = 0.0
    pts = probe_points(probes, seed=seed)
    for s0 in pts:
        r = plant.rhs_eval(ydt, s0)
        g = plant.g1(s0)
        m = g.T @ g
        res = r - g @ np.linalg.solve(m, g.T @ r)
        scale = 1.0 + float(np.max(np.abs(ydt(s0))))
        residual = max(residual, float(np.max(np.abs(res))) / scale)

    trackable = ic_ok and residual <= RESIDUAL_TOL
    witness = desired_input_underactuated(plant, yd, _unchecked=True)
    return TrackabilityVerdict(
        trackable=trackable,
        realizable=trackable,
        initial_condition_ok=ic_ok,
        residual=residual,
        witness=witness if trackable else witness,
        probes_used=probes,
    )


def desired_input_underactuated(plant, yd, verdict=None, _unchecked=False):
    """Pointwise evaluator of the unique desired input for q >= p.

    U_d(s) = [G1^T G1]^-1 G1^T [Y_d(s) - G2(s) D(s)], evaluated through a
    linear solve at each requested point.
    """
    yd = signal_vector(yd)
    _require_analytic(yd)
    if not _unchecked:
        if verdict is None:
            verdict = check_trackable_underactuated(plant, yd)
        if not verdict.trackable:
            raise ValueError("trajectory is not trackable; no desired input exists")
    ydt = transform_vector(yd)

    def u_d(s0):
        r = plant.rhs_eval(ydt, s0)
        g = plant.g1(s0)
        return np.linalg.solve(g.T @ g, g.T @ r)

    return u_d


def check_trackable_overactuated(plant, yd, ud2=None, seed=0, probes=DEFAULT_PROBES):
    """Trackability for q <= p: the initial condition alone decides.

    The witness evaluates the solution-set member selected by ``ud2``, the
    trajectory of the p-q free input channels (zero when omitted); free
    channels refer to the stored column permutation, reported on the
    verdict.  Realizable only in the square case q = p.
    """
    yd = signal_vector(yd)
    _require_analytic(yd)
    if plant.q > plant.p:
        raise ValueError("overactuated check requires q <= p")
    if len(yd) != plant.q:
        raise ValueError("trajectory dimension does not match the plant output")
    free = plant.p - plant.q
    if ud2 is None:
        ud2 = zero_signal(free)
    ud2 = signal_vector(ud2)
    _require_analytic(ud2)
    if len(ud2) != free:
        raise ValueError(f"ud2 must supply the {free} free input channels")

    ic_ok = check_initial_condition(plant, yd)
    trackable = ic_ok
    realizable = trackable and plant.q == plant.p

    ydt = transform_vector(yd)
    ud2t = transform_vector(ud2)
    perm = plant.permutation
    g11 = plant.g1.select_columns(list(perm[: plant.q]))
    g12 = plant.g1.select_columns(list(perm[plant.q:]))

    def u_d(s0):
        r = plant.rhs_eval(ydt, s0)
        u2 = ud2t(s0)
        if free:
            r = r - g12(s0) @ u2
        u1 = np.linalg.solve(g11(s0), r)
        out = np.empty((plant.p, 1), dtype=complex)
        out[list(perm[: plant.q])] = u1
        if free:
            out[list(perm[plant.q:])] = u2
        return out

    return TrackabilityVerdict(
        trackable=trackable,
        realizable=realizable,
        initial_condition_ok=ic_ok,
        residual=None,
        witness=u_d,
        probes_used=probes,
        permutation=perm,
        free_channels=free,
    )


def statespace_plant(A, B, C, x0=None, w=None):
    """Plant built from a state-space triple (A, B, C) with initial state.

    The rational matrices are constructed symbolically from the adjugate of
    (sI - A) and the characteristic polynomial (Faddeev-LeVerrier), the
    exogenous channel carries d0 = (x0, 0) and the regular part (0, w), and
    the native realization is kept for direct simulation.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    n = A.shape[0]
    if B.ndim != 2:
        B = B.reshape(n, -1)
    if C.ndim != 2:
        C = C.reshape(-1, n)
    if B.shape[0] != n or C.shape[1] != n:
        raise ValueError("A, B, C dimensions are inconsistent")
    q, p = C.shape[0], B.shape[1]
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(n)

    alpha, adj_coeffs = _faddeev_leverrier(A)
    den = Poly(alpha)

    def rational_from(M_list):
        # M_list[k] multiplies s^(n-1-k); build ascending coefficient arrays.
        rows, cols = M_list[0].shape
        ent = []
        for i in range(rows):
            for j in range(cols):
                coeffs = [0.0] * n
                for k, M in enumerate(M_list):
                    coeffs[n - 1 - k] = M[i, j]
                ent.append(RationalFunction(Poly(coeffs), den))
        return RationalMatrix(rows, cols, ent)

    g1 = rational_from([C @ Mk @ B for Mk in adj_coeffs])
    cadj = rational_from([C @ Mk for Mk in adj_coeffs])
    # G2 = [C(sI-A)^-1, C(sI-A)^-1]: first block routes the initial state,
    # second the external disturbance w.
    g2 = RationalMatrix(
        q, 2 * n, [cadj[i, j % n] for i in range(q) for j in range(2 * n)]
    )

    if w is None:
        w = zero_signal(n)
    w = signal_vector(w)
    if len(w) != n:
        raise ValueError("w must have one channel per state")
    exo = ExogenousInput(np.concatenate([x0, np.zeros(n)]), zero_signal(n) + w)

    from .realization import StateSpace

    native = {
        "ss": StateSpace(A, B, C, np.zeros((q, p))),
        "x0": x0,
        "w": w,
    }
    return Plant(g1, g2, exo, native=native)


def _faddeev_leverrier(A):
    """Characteristic polynomial and adjugate expansion of (sI - A).

    Returns ``(alpha, [M_0, ..., M_{n-1}])`` with alpha ascending and
    adj(sI - A) = sum_k M_k s^(n-1-k).
    """
    n = A.shape[0]
    alpha = [0.0] * (n + 1)
    alpha[n] = 1.0
    M = np.eye(n)
    coeffs = [M]
    for k in range(1, n + 1):
        AM = A @ M
        c = -np.trace(AM) / k
        alpha[n - k] = c
        if k < n:
            M = AM + c * np.eye(n)
            coeffs.append(M)
    return alpha, coeffs
