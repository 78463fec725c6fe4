"""ilctrack: trackability analysis and iterative learning control for
continuous-time MIMO LTI systems.

The package decides whether a desired output trajectory is trackable under
iterative learning control, validates ILC update-law gains, simulates the
full time-by-iteration learning process, and cross-checks simulated limits
against closed-form frequency-domain predictions.
"""

from .poly import Poly, PolyMatrix, S
from .ratmat import (
    PoleAtPointError,
    PropernessClass,
    RationalFunction,
    RationalMatrix,
    probe_points,
)
from .laplace import (
    ExogenousInput,
    SignalExpr,
    Term,
    constant_signal,
    derivative_vector,
    sample_exprs,
    signal_vector,
    transform_vector,
    zero_signal,
)
from .realization import (
    RealizationError,
    StateSpace,
    inverse,
    markov_from_ss,
    realize,
    series,
    static_gain,
    times_s,
    transpose_ss,
)
from .simulate import Grid, SampledSignal, finite_diff, lambda_norm, lsim, sup_norm
from .trackability import (
    ConditionError,
    Plant,
    TrackabilityVerdict,
    check_initial_condition,
    check_trackable_overactuated,
    check_trackable_underactuated,
    desired_input_underactuated,
    projector,
    statespace_plant,
)
from .ilc import (
    ConvergenceCheck,
    DisturbanceModel,
    DivergenceError,
    FcsDiagnostic,
    GainOperator,
    IlcRunReport,
    LambdaInfo,
    check_convergence_condition,
    default_lambda,
    desired_input_signal,
    dtype_gain,
    fcs_diagnostic,
    ilc_run,
    predict_limit_overactuated,
    predict_limit_underactuated,
    robustness_run,
    simulate_error_limit,
    simulate_input_limit,
    validate_gain,
)
from .scenarios import (
    Case,
    Scenario,
    ScenarioError,
    builtin_scenario,
    builtin_scenario_names,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

__version__ = "0.1.0"
