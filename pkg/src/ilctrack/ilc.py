"""ILC update-law validation, execution, limit prediction, and diagnostics.

The update law is U_{k+1}(s) = U_k(s) + Gamma(s) E_k(s) with a gain operator
Gamma(s) = s*(Gamma0 + Gammahat(s)).  Its time-domain form drives each
iteration of `ilc_run`: a derivative-of-error term through Gamma0 plus a
strictly proper filter applied to the error derivative.  Convergence is
governed by the spectral radius of I minus the high-frequency limit of
Gamma*G1 (input side, q >= p) or G1*Gamma (output side, q <= p), and the
iteration-domain contraction is observable through lambda-norm ratios of the
input increments.
"""

from dataclasses import dataclass, field

import numpy as np

from .laplace import (
    SignalExpr,
    derivative_vector,
    sample_exprs,
    signal_vector,
    transform_vector,
    zero_signal,
)
from .ratmat import RationalMatrix, probe_points
from .realization import inverse, realize, series, static_gain, times_s, transpose_ss
from .simulate import SampledSignal, finite_diff, lambda_norm, lsim, sup_norm
from .trackability import check_initial_condition

__all__ = [
    "GainOperator",
    "ConvergenceCheck",
    "LambdaInfo",
    "IterationRecord",
    "IlcRunReport",
    "DisturbanceModel",
    "DivergenceError",
    "FcsDiagnostic",
    "validate_gain",
    "dtype_gain",
    "check_convergence_condition",
    "default_lambda",
    "ilc_run",
    "robustness_run",
    "predict_limit_underactuated",
    "predict_limit_overactuated",
    "simulate_error_limit",
    "simulate_input_limit",
    "desired_input_signal",
    "fcs_diagnostic",
]

DIVERGENCE_FACTOR = 1e6
IMPULSE_REL_TOL = 1e-6


class DivergenceError(RuntimeError):
    """The learning iteration blew up; carries the partial run report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class GainOperator:
    """Validated gain Gamma(s) = s*(Gamma0 + Gammahat(s)).

    ``gamma0`` is the (nonzero) high-frequency limit of Gamma(s)/s and
    ``gammahat`` the strictly proper remainder (None when absent, e.g. for
    the derivative-only law Gamma(s) = s*Upsilon).
    """

    def __init__(self, gamma0, gammahat=None):
        gamma0 = np.atleast_2d(np.asarray(gamma0, dtype=float))
        if not np.any(gamma0):
            raise ValueError("Gamma0 must be nonzero")
        if gammahat is not None:
            cls = gammahat.classify()
            if not cls.is_strictly_proper:
                raise ValueError("Gammahat must be strictly proper")
            if gammahat.shape != gamma0.shape:
                raise ValueError("Gamma0 and Gammahat shapes disagree")
            if all(e.is_zero for e in gammahat.entries):
                gammahat = None
        self.gamma0 = gamma0
        self.gammahat = gammahat
        self._ghat_ss = None

    @property
    def p(self):
        return self.gamma0.shape[0]

    @property
    def q(self):
        return self.gamma0.shape[1]

    @property
    def is_dtype(self):
        return self.gammahat is None

    def ghat_ss(self):
        if self.gammahat is None:
            return None
        if self._ghat_ss is None:
            self._ghat_ss = realize(self.gammahat)
        return self._ghat_ss

    def proper_part_ss(self, rows=None):
        """Realization of Gamma0 + Gammahat(s) (optionally a row subset)."""
        idx = list(range(self.p)) if rows is None else list(rows)
        if self.gammahat is None:
            return static_gain(self.gamma0[idx])
        ss = realize(self.gammahat.select_rows(idx))
        from .realization import StateSpace

        return StateSpace(ss.A, ss.B, ss.C, self.gamma0[idx])

    def eval(self, s0):
        """Gamma(s0) as a complex matrix."""
        g = self.gamma0.astype(complex)
        if self.gammahat is not None:
            g = g + self.gammahat(s0)
        return s0 * g

    def rational(self):
        """Materialized Gamma(s) as a RationalMatrix."""
        const = RationalMatrix.constant(self.gamma0)
        if self.gammahat is None:
            return const.times_s()
        return (const + self.gammahat).times_s()

    def __repr__(self):
        kind = "D-type" if self.is_dtype else "dynamic"
        return f"GainOperator({kind}, p={self.p}, q={self.q})"


def validate_gain(gamma_raw, plant=None):
    """Accept a raw rational gain iff Gamma(s)/s is proper with nonzero limit.

    Splits Gamma(s)/s into its limit Gamma0 and strictly proper remainder
    Gammahat.  When a plant is supplied, the equivalent properness of
    Gamma*G1 and G1*Gamma is cross-checked against the limit products
    Gamma0*Phi1(0) and Phi1(0)*Gamma0; disagreement signals a bug.
    """
    sinv = gamma_raw.over_s()
    cls = sinv.classify()
    if cls.kind == "improper":
        raise ValueError("Gamma(s)/s is improper: the gain grows faster than s")
    if cls.kind == "strictly_proper":
        raise ValueError("Gamma(s)/s has zero limit: Gamma0 would vanish")
    gamma0 = cls.limit
    gammahat = sinv - RationalMatrix.constant(gamma0)
    gain = GainOperator(gamma0, gammahat)

    if plant is not None:
        if gain.q != plant.q or gain.p != plant.p:
            raise ValueError("gain dimensions do not match the plant")
        lim_in = gamma0 @ plant.phi1_0
        lim_out = plant.phi1_0 @ gamma0
        gm = gain.rational()
        for prod, lim in (((gm @ plant.g1), lim_in), ((plant.g1 @ gm), lim_out)):
            pc = prod.classify()
            if not pc.is_proper:
                raise ValueError("gain/plant properness cross-check failed")
            if np.max(np.abs(pc.limit - lim)) > 1e-6 * (1.0 + np.max(np.abs(lim))):
                raise ValueError("properness limits disagree with the Markov product")
    return gain


def dtype_gain(upsilon):
    """Derivative-only gain Gamma(s) = s*Upsilon."""
    upsilon = np.atleast_2d(np.asarray(upsilon, dtype=float))
    if not np.any(upsilon):
        raise ValueError("Upsilon must be nonzero")
    return GainOperator(upsilon, None)


@dataclass(frozen=True)
class ConvergenceCheck:
    """Spectral-radius certificate for the learning iteration."""

    side: str  # "input_side" or "output_side"
    rho: float
    satisfied: bool
    limit_matrix: np.ndarray

    def to_dict(self):
        return {"side": self.side, "rho": self.rho, "satisfied": self.satisfied}


def check_convergence_condition(plant, gain):
    """rho(I - Gamma0 Phi1(0)) for q >= p, rho(I - Phi1(0) Gamma0) for q <= p."""
    phi0 = plant.phi1_0
    if plant.q >= plant.p:
        side = "input_side"
        lim = gain.gamma0 @ phi0
    else:
        side = "output_side"
        lim = phi0 @ gain.gamma0
    rho = float(np.max(np.abs(np.linalg.eigvals(np.eye(lim.shape[0]) - lim))))
    return ConvergenceCheck(side=side, rho=rho, satisfied=rho < 1.0, limit_matrix=lim)


@dataclass(frozen=True)
class LambdaInfo:
    """Lambda-norm weight derived from the contraction construction.

    ``lambda_star = 2 beta_F / (1 - rho1)`` where rho1 is the norm of the
    iteration filter's feedthrough and beta_F the peak norm of its impulse
    response on [0, T]; with this weight the lambda-norm contraction ratio
    is at most ``rho_bound = (rho1 + 1)/2``.
    """

    lambda_star: float
    rho1: float
    beta_f: float

    @property
    def rho_bound(self):
        return (self.rho1 + 1.0) / 2.0


def _iteration_filter_ss(plant, gain):
    """Realization of Gamma*G1 (q >= p) or G1*Gamma (q <= p)."""
    h1 = times_s(plant.g1_ss())
    if plant.q >= plant.p:
        return series(h1, gain.proper_part_ss())
    return series(gain.proper_part_ss(), h1)


def default_lambda(plant, gain, grid):
    """Diagnostic lambda weight from the contraction-proof construction.

    When the filter feedthrough norm is not below 1 no contraction weight
    exists; a neutral weight of 1 is returned so that telemetry of a
    (presumably diverging) run can still be recorded, and the rho1 >= 1
    value on the result exposes the failure.
    """
    m_ss = _iteration_filter_ss(plant, gain)
    d_f = np.eye(m_ss.D.shape[0]) - m_ss.D
    rho1 = float(np.linalg.norm(d_f, 2))
    # Impulse response of the strictly proper filter part, peak spectral norm.
    beta_f = 0.0
    if m_ss.n:
        from .simulate import _rk4_matrices

        E, _, _ = _rk4_matrices(m_ss.A, grid.h)
        X = m_ss.B.copy()
        for _ in range(grid.N):
            beta_f = max(beta_f, float(np.linalg.norm(m_ss.C @ X, 2)))
            X = E @ X
    if rho1 >= 1.0 or beta_f == 0.0:
        return LambdaInfo(lambda_star=1.0, rho1=rho1, beta_f=beta_f)
    return LambdaInfo(lambda_star=2.0 * beta_f / (1.0 - rho1), rho1=rho1, beta_f=beta_f)


@dataclass(frozen=True)
class IterationRecord:
    k: int
    sup_error: float
    lambda_delta_u: float
    impulse_gap: float


@dataclass
class IlcRunReport:
    """Per-iteration telemetry plus final signals of one learning run."""

    records: list
    final_u: SampledSignal
    final_y: SampledSignal
    final_e: SampledSignal
    delta_profiles: np.ndarray  # (K, N) max-abs channel profile of each du_k
    lambda_used: float
    lambda_info: LambdaInfo
    condition: ConvergenceCheck
    grid: object
    impulse_flagged: bool = False
    fitted_rho: float = float("nan")
    limsup_estimate: float | None = None
    diverged: bool = False

    @property
    def iterations(self):
        return len(self.records)

    @property
    def final_sup_error(self):
        return sup_norm(self.final_e)

    def sup_errors(self):
        return np.array([r.sup_error for r in self.records] + [self.final_sup_error])

    def delta_lambda_norms(self, lam=None):
        """Lambda-norms of every input increment, recomputable for any weight."""
        lam = self.lambda_used if lam is None else lam
        if lam <= 0:
            raise ValueError("lambda must be positive")
        w = np.exp(-lam * self.grid.times())
        if not len(self.delta_profiles):
            return np.zeros(0)
        return np.max(self.delta_profiles * w[None, :], axis=1)

    def to_metrics_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("k,sup_error,lambda_delta_u,impulse_gap\n")
            for r in self.records:
                fh.write(
                    f"{r.k},{r.sup_error:.12g},{r.lambda_delta_u:.12g},{r.impulse_gap:.12g}\n"
                )

    def summary_dict(self):
        return {
            "iterations": self.iterations,
            "final_sup_error": self.final_sup_error,
            "lambda_used": self.lambda_used,
            "rho_bound": self.lambda_info.rho_bound,
            "rho1": self.lambda_info.rho1,
            "condition": self.condition.to_dict(),
            "fitted_rho": None if np.isnan(self.fitted_rho) else self.fitted_rho,
            "impulse_flagged": self.impulse_flagged,
            "limsup_estimate": self.limsup_estimate,
            "diverged": self.diverged,
        }


class DisturbanceModel:
    """Seeded generator of iteration-varying exogenous uncertainty.

    Per iteration it draws an impulsive part theta_k (bounded by
    ``beta_theta`` in max-abs) and a regular part thetahat_k(t) (bounded by
    ``beta_thetahat`` uniformly on the horizon).  For a fixed seed the
    underlying shapes are identical across bound values, only scaled, so
    sweeps over the bounds are directly comparable.
    """

    def __init__(self, beta_theta, beta_thetahat, seed=0):
        if beta_theta < 0 or beta_thetahat < 0:
            raise ValueError("bounds must be nonnegative")
        self.beta_theta = float(beta_theta)
        self.beta_thetahat = float(beta_thetahat)
        self.seed = int(seed)

    @property
    def is_zero(self):
        return self.beta_theta == 0.0 and self.beta_thetahat == 0.0

    def draw(self, k, dims, grid):
        """(theta_k, thetahat_k sampled) for iteration k."""
        rng = np.random.default_rng((self.seed, k))
        raw = rng.uniform(-1.0, 1.0, size=dims)
        theta = self.beta_theta * raw
        t = grid.times()
        vals = np.zeros((grid.N, dims))
        for j in range(dims):
            acc = np.zeros(grid.N)
            for _ in range(3):
                amp = rng.uniform(0.3, 1.0)
                om = rng.uniform(0.2, 3.0)
                ph = rng.uniform(0.0, 2.0 * np.pi)
                acc += amp * np.sin(om * t + ph)
            peak = np.max(np.abs(acc))
            if peak > 0:
                vals[:, j] = (self.beta_thetahat * rng.uniform(0.5, 1.0) / peak) * acc
        return theta, SampledSignal(grid, vals)


def _exogenous_response(plant, grid, theta=None, thetahat=None):
    """Output contribution of G2(s) D(s) (plus optional per-iteration
    uncertainty) on the grid; impulsive parts enter as state jumps."""
    exo = plant.exo
    if plant.native is not None:
        ss = plant.native["ss"]
        x0 = plant.native["x0"].copy()
        w_sig = sample_exprs(plant.native["w"], grid)
        w_vals = w_sig.values
        if theta is not None and np.any(theta):
            # theta = (theta_a, theta_b): both route through C(sI-A)^-1.
            x0 = x0 + theta[: ss.n] + theta[ss.n :]
        if thetahat is not None:
            w_vals = w_vals + thetahat.values[:, : ss.n] + thetahat.values[:, ss.n :]
        return lsim(ss, None, w=SampledSignal(grid, w_vals), x0=x0, grid=grid)

    need_nominal = not exo.is_zero
    need_extra = (theta is not None and np.any(theta)) or (
        thetahat is not None and np.any(thetahat.values)
    )
    if not (need_nominal or need_extra):
        return SampledSignal.zeros(grid, plant.q)
    ss2 = plant.g2_ss()
    d0 = exo.d0.copy()
    if theta is not None:
        d0 = d0 + theta
    dvals = sample_exprs(exo.dhat, grid).values
    if thetahat is not None:
        dvals = dvals + thetahat.values
    return lsim(ss2, SampledSignal(grid, dvals), x0=ss2.B @ d0, grid=grid)


def ilc_run(plant, gain, yd, u0, iterations, grid, lam=None, disturbance=None):
    """Run the learning iteration and record its convergence telemetry.

    Each pass simulates the plant, forms the tracking error and its
    derivative (analytic trajectory derivative minus finite differences of
    the simulated output), applies the update u + Gamma0*edot + filter, and
    records sup error, lambda-norm of the increment, and the impulse gap
    |Gamma0 e_k(0)|.  A nonzero impulse gap means the exact time-domain law
    would need an impulsive term; the run flags it, drops the impulse, and
    continues.  Divergence (sup error exceeding 1e6 x its initial value)
    aborts with the partial report attached to the exception.
    """
    yd = signal_vector(yd)
    if len(yd) != plant.q:
        raise ValueError("trajectory dimension does not match the plant")
    if isinstance(u0, SampledSignal):
        u = u0
        if u.grid != grid:
            raise ValueError("u0 lives on a different grid")
    else:
        u = sample_exprs(signal_vector(u0), grid)
    if u.dims != plant.p:
        raise ValueError("initial input dimension does not match the plant")

    cond = check_convergence_condition(plant, gain)
    lam_info = default_lambda(plant, gain, grid)
    lam_used = lam_info.lambda_star if lam is None else float(lam)

    yd_sig = sample_exprs(yd, grid)
    yd_dot = sample_exprs(derivative_vector(yd), grid)
    scale = 1.0 + sup_norm(yd_sig)

    g1 = plant.native["ss"] if plant.native is not None else plant.g1_ss()
    ghat = gain.ghat_ss()

    records = []
    profiles = []
    impulse_flagged = False
    e0_scale = None

    has_nominal_exo = plant.native is not None or not plant.exo.is_zero
    exo_nominal = _exogenous_response(plant, grid) if has_nominal_exo else None
    noisy = disturbance is not None and not disturbance.is_zero

    def _simulate(u_now, k):
        y = lsim(g1, u_now, grid=grid)
        if noisy:
            theta, thetahat = disturbance.draw(k, plant.m, grid)
            # includes the nominal exogenous part alongside the uncertainty
            return y + _exogenous_response(plant, grid, theta, thetahat)
        return y + exo_nominal if exo_nominal is not None else y

    def _report(yk, ek, diverged=False):
        rep = IlcRunReport(
            records=records,
            final_u=u,
            final_y=yk,
            final_e=ek,
            delta_profiles=np.array(profiles) if profiles else np.zeros((0, grid.N)),
            lambda_used=lam_used,
            lambda_info=lam_info,
            condition=cond,
            grid=grid,
            impulse_flagged=impulse_flagged,
            diverged=diverged,
        )
        diag = fcs_diagnostic(rep)
        rep.fitted_rho = diag.fitted_rho
        return rep

    last_y = SampledSignal.zeros(grid, plant.q)
    last_e = yd_sig
    for k in range(iterations):
        try:
            y = _simulate(u, k)
        except ValueError as exc:
            if "non-finite" not in str(exc):
                raise
            raise DivergenceError(
                f"simulation overflowed at iteration {k}",
                report=_report(last_y, last_e, diverged=True),
            ) from None
        e_vals = yd_sig.values - y.values
        sup_e = float(np.max(np.abs(e_vals))) if e_vals.size else 0.0
        last_y, last_e = y, SampledSignal(grid, e_vals)
        if e0_scale is None:
            e0_scale = max(sup_e, 1e-12)
        if sup_e > DIVERGENCE_FACTOR * e0_scale or not np.isfinite(sup_e):
            raise DivergenceError(
                f"sup error {sup_e:.3g} exceeded {DIVERGENCE_FACTOR:g} x initial at iteration {k}",
                report=_report(last_y, last_e, diverged=True),
            )
        edot = SampledSignal(grid, yd_dot.values - finite_diff(y).values)
        e0 = e_vals[0]
        impulse_gap = float(np.max(np.abs(gain.gamma0 @ e0), initial=0.0))
        if impulse_gap > IMPULSE_REL_TOL * scale:
            impulse_flagged = True

        du_vals = edot.values @ gain.gamma0.T
        if ghat is not None:
            filt = lsim(ghat, edot, x0=ghat.B @ e0, grid=grid)
            du_vals = du_vals + filt.values
        du = SampledSignal(grid, du_vals)

        records.append(
            IterationRecord(
                k=k,
                sup_error=sup_e,
                lambda_delta_u=lambda_norm(du, lam_used),
                impulse_gap=impulse_gap,
            )
        )
        profiles.append(du.channel_norms())
        u = SampledSignal(grid, u.values + du_vals)

    y_final = _simulate(u, iterations)
    e_final = SampledSignal(grid, yd_sig.values - y_final.values)
    return _report(y_final, e_final)


def robustness_run(plant, gain, yd, u0, iterations, grid, model, lam=None):
    """Learning run under iteration-varying bounded uncertainty.

    The per-iteration disturbance rides on the exogenous channel; the
    report's ``limsup_estimate`` is the max sup error over the last 20% of
    iterations, an empirical stand-in for the limsup bound (the closed-form
    constants are not available, only existence).
    """
    cond = check_convergence_condition(plant, gain)
    if not cond.satisfied:
        raise ValueError("robustness run requires the convergence condition to hold")
    report = ilc_run(
        plant, gain, yd, u0, iterations, grid, lam=lam, disturbance=model
    )
    sups = report.sup_errors()
    tail = max(1, int(np.ceil(0.2 * len(sups))))
    report.limsup_estimate = float(np.max(sups[-tail:]))
    return report


# -- closed-form limits ---------------------------------------------------


def _require_condition(plant, gain, want_side):
    cond = check_convergence_condition(plant, gain)
    if cond.side != want_side or not cond.satisfied:
        raise ValueError(
            f"limit prediction needs the {want_side} condition satisfied "
            f"(side={cond.side}, rho={cond.rho:.3f})"
        )
    return cond


def predict_limit_underactuated(plant, gain, yd):
    """Pointwise evaluators (u_inf, e_inf) of the learned limit for q >= p.

    U_inf(s) = [Gamma G1]^-1 Gamma [Y_d - G2 D] and E_inf(s) the matching
    residual; for trackable trajectories u_inf coincides with the unique
    desired input and e_inf vanishes.
    """
    if plant.q < plant.p:
        raise ValueError("underactuated limit requires q >= p")
    _require_condition(plant, gain, "input_side")
    yd = signal_vector(yd)
    ydt = transform_vector(yd)

    def u_inf(s0):
        r = plant.rhs_eval(ydt, s0)
        g = plant.g1(s0)
        gm = gain.eval(s0)
        return np.linalg.solve(gm @ g, gm @ r)

    def e_inf(s0):
        r = plant.rhs_eval(ydt, s0)
        g = plant.g1(s0)
        return r - g @ u_inf(s0)

    return u_inf, e_inf


def predict_limit_overactuated(plant, gain, yd, u0):
    """Pointwise evaluator of the learned limit for q <= p.

    U_inf(s) = Gamma [G1 Gamma]^-1 [Y_d - G2 D] + Gammatilde(s) U_0(s); the
    initial-input term runs through the block formulas built on the stored
    column permutation.  ``u0`` must be an analytic trajectory so its
    transform is rational.
    """
    if plant.q > plant.p:
        raise ValueError("overactuated limit requires q <= p")
    _require_condition(plant, gain, "output_side")
    yd = signal_vector(yd)
    u0 = signal_vector(u0)
    if len(u0) != plant.p:
        raise TypeError("u0 must be an analytic trajectory with one channel per input")
    ydt = transform_vector(yd)
    u0t = transform_vector(u0)
    q, p = plant.q, plant.p
    perm = plant.permutation
    lead = list(perm[:q])
    free = list(perm[q:])
    g11 = plant.g1.select_columns(lead)
    g12 = plant.g1.select_columns(free)

    def u_inf(s0):
        r = plant.rhs_eval(ydt, s0)
        g = plant.g1(s0)
        gm = gain.eval(s0)
        m = g @ gm  # q x q
        out = gm @ np.linalg.solve(m, r)
        if free:
            u0v = u0t(s0)
            gm2 = gm[free, :]
            # [Omega21 Omega22] U0 = u0_free - Gamma2 M^-1 G1 U0
            w0 = u0v[free] - gm2 @ np.linalg.solve(m, g @ u0v)
            top = -np.linalg.solve(g11(s0), g12(s0) @ w0)
            contrib = np.zeros((p, 1), dtype=complex)
            contrib[lead] = top
            contrib[free] = w0
            out = out + contrib
        return out

    return u_inf


def desired_input_signal(plant, yd, grid, ud2=None):
    """Time-domain desired input by simulating the closed-form solution.

    For q >= p this integrates u_d = (H^T H)^-1 H^T [rdot] with H = s G1,
    which is the proper-system form of the pseudo-inverse formula; for
    q <= p it solves the leading block G11 u_1 = r - G12 u_2 the same way.
    Exercises only proper, invertible-feedthrough compositions.
    """
    yd = signal_vector(yd)
    rdot = _rhs_derivative_signal(plant, yd, grid)
    h1 = times_s(plant.g1_ss())
    if plant.q >= plant.p:
        ht = transpose_ss(h1)
        z = lsim(ht, rdot, grid=grid)
        return lsim(inverse(series(h1, ht)), z, grid=grid)
    # Overactuated: leading block solve in permuted coordinates.
    q, p = plant.q, plant.p
    perm = plant.permutation
    lead, free = list(perm[:q]), list(perm[q:])
    if ud2 is None:
        ud2 = zero_signal(p - q)
    ud2_sig = sample_exprs(signal_vector(ud2), grid)
    g11 = realize(plant.g1.select_columns(lead))
    h11 = times_s(g11)
    rhs = rdot
    if free:
        h12 = times_s(realize(plant.g1.select_columns(free)))
        rhs = SampledSignal(grid, rdot.values - lsim(h12, ud2_sig, grid=grid).values)
    u1 = lsim(inverse(h11), rhs, grid=grid)
    vals = np.zeros((grid.N, p))
    vals[:, lead] = u1.values
    if free:
        vals[:, free] = ud2_sig.values
    return SampledSignal(grid, vals)


def _rhs_derivative_signal(plant, yd, grid):
    """d/dt of r(t) = y_d(t) - (G2 d)(t); exact for the trajectory part."""
    yd_dot = sample_exprs(derivative_vector(yd), grid)
    if plant.native is None and plant.exo.is_zero:
        return yd_dot
    exo_y = _exogenous_response(plant, grid)
    return SampledSignal(grid, yd_dot.values - finite_diff(exo_y).values)


def _rhs_signal(plant, yd, grid):
    """r(t) = y_d(t) - (G2 d)(t) on the grid."""
    yd_sig = sample_exprs(yd, grid)
    if plant.native is None and plant.exo.is_zero:
        return yd_sig
    exo_y = _exogenous_response(plant, grid)
    return SampledSignal(grid, yd_sig.values - exo_y.values)


def simulate_input_limit(plant, gain, yd, u0, grid):
    """Time-domain realization of the learned-limit input formula.

    Builds the formula as a composition of proper state-space blocks (never
    inverting a rational matrix symbolically) and integrates it on the
    grid.  For q >= p this is [Gamma G1]^-1 Gamma [Y_d - G2 D]; for q <= p
    the initial-input term Gammatilde U_0 is added through the block
    identities of the limit-set construction.
    """
    yd = signal_vector(yd)
    u0 = signal_vector(u0)
    rdot = _rhs_derivative_signal(plant, yd, grid)
    h1 = times_s(plant.g1_ss())
    gain_ss = gain.proper_part_ss()

    if plant.q >= plant.p:
        _require_condition(plant, gain, "input_side")
        m_ss = series(h1, gain_ss)  # Gamma(s) G1(s)
        z = lsim(gain_ss, rdot, grid=grid)
        return lsim(inverse(m_ss), z, grid=grid)

    _require_condition(plant, gain, "output_side")
    q, p = plant.q, plant.p
    m_ss = series(gain_ss, h1)  # G1(s) Gamma(s)
    inv_m = inverse(m_ss)
    # Term 1: Gamma [G1 Gamma]^-1 R = (Gamma0 + Gammahat) inv(M) (s R)
    z1 = lsim(inv_m, rdot, grid=grid)
    term1 = lsim(gain_ss, z1, grid=grid)

    perm = plant.permutation
    lead, free = list(perm[:q]), list(perm[q:])
    out_vals = term1.values.copy()
    if free and any(not f.is_zero for f in u0):
        u0_sig = sample_exprs(u0, grid)
        # s G1 U0 is the exact derivative of the strictly proper response.
        _, g1u0_dot = lsim(plant.g1_ss(), u0_sig, grid=grid, return_deriv=True)
        z2 = lsim(inv_m, g1u0_dot, grid=grid)
        gamma2_ss = gain.proper_part_ss(rows=free)
        t2 = lsim(gamma2_ss, z2, grid=grid)
        w0 = SampledSignal(grid, u0_sig.values[:, free] - t2.values)
        h11 = times_s(realize(plant.g1.select_columns(lead)))
        h12 = times_s(realize(plant.g1.select_columns(free)))
        k_ss = series(h12, inverse(h11))  # G11^-1 G12
        top = lsim(k_ss, w0, grid=grid)
        out_vals[:, lead] -= top.values
        out_vals[:, free] += w0.values
    return SampledSignal(grid, out_vals)


def simulate_error_limit(plant, gain, yd, grid):
    """Time-domain realization of the limiting tracking error for q >= p.

    e_inf(t) = r(t) - (G1 u_inf)(t) with u_inf from the learned-limit
    formula; nonzero exactly when the trajectory is untrackable.
    """
    if plant.q < plant.p:
        raise ValueError("error limit formula applies to q >= p")
    yd = signal_vector(yd)
    u_inf = simulate_input_limit(plant, gain, yd, zero_signal(plant.p), grid)
    r = _rhs_signal(plant, yd, grid)
    y_from_u = lsim(plant.g1_ss(), u_inf, grid=grid)
    return SampledSignal(grid, r.values - y_from_u.values)


@dataclass(frozen=True)
class FcsDiagnostic:
    """Lambda-norm contraction diagnostic over the input increments."""

    ratios: np.ndarray
    fitted_rho: float
    is_contractive: bool
    degenerate: bool
    lambda_used: float


def fcs_diagnostic(report, lam=None):
    """Fit the contraction ratio of ||du_{k+1}||_lambda / ||du_k||_lambda.

    Iterations whose increment norm has decayed below h^2 x the peak are
    excluded before fitting: the simulator and the error differentiator are
    both second-order schemes, so increments below that level are dominated
    by discretization bias rather than the contraction being measured
    (empirically the bias plateau sits two orders below h^2 x peak).  With
    fewer than 5 usable iterations the run is reported as a degenerate
    fixed point (trivially contractive).
    """
    lam = report.lambda_used if lam is None else float(lam)
    norms = report.delta_lambda_norms(lam)
    if not len(norms):
        return FcsDiagnostic(np.zeros(0), 0.0, True, True, lam)
    # Keep the leading contiguous stretch above the bias floor.
    floor = max(1e-10, report.grid.h**2) * float(np.max(norms))
    end = len(norms)
    for i in range(len(norms)):
        if norms[i] <= floor:
            end = i
            break
    usable = np.arange(end)
    if len(usable) < 5:
        return FcsDiagnostic(np.zeros(0), 0.0, True, True, lam)
    seq = norms[usable]
    ratios = seq[1:] / seq[:-1]
    half = len(ratios) // 2
    late = ratios[half:]
    fitted = float(np.exp(np.mean(np.log(late))))
    bound = report.lambda_info.rho_bound
    contractive = fitted < 1.0 and bool(np.all(late <= bound + 0.05))
    return FcsDiagnostic(ratios, fitted, contractive, False, lam)
