"""Device-independent bit commitment on sequential CHSH testing.

A simulator for the protocol and its variants against honest, noisy, and
adversarial black-box devices, plus the numerical security analysis: the
information-gain bound, the asymptotic and finite-round control bounds, and
the martingale tail they rest on.
"""

from .quantum import (
    TSIRELSON_BOUND,
    OutcomePair,
    TwoQubitState,
    ZxObservable,
    chsh_value,
    collapse,
    correlator,
    epr_state,
    joint_distribution,
    werner_state,
)
from .devices import (
    DevicePair,
    MeasureRequest,
    alice_cheat_pair,
    bob_cheat_pair,
    classical_pair,
    counter_cheat_pair,
    honest_pair,
    measure,
    pr_pair,
)
from .protocol import (
    ACCEPTED,
    ABORT_CORRELATION_MISMATCH,
    ABORT_LOW_VIOLATION,
    ABORT_TIMEOUT,
    ABORT_TOKEN_MISMATCH,
    HONEST_BOB,
    BobStrategy,
    HonestAlice,
    HonestPrAlice,
    MidpointCheatAlice,
    PrCheatAlice,
    ProtocolConfig,
    RoundRecord,
    ScriptedAlice,
    Transcript,
    bob_gain_cheat_main,
    run_free_reveal,
    run_large_office,
    run_main,
    run_pr,
    transcript_from_json,
)
from .analysis import (
    BoundInputs,
    ControlCurve,
    NsBox,
    azuma_tail,
    chsh_indicator,
    control_curve,
    control_of_violation,
    free_reveal_control,
    k0,
    max_gain_objective,
    max_pr_control_objective,
    ns_vertices,
    pcont_bound,
    pcont_bound_detail,
    phi_opt,
    q_epsilon,
    running_violation,
    strategy_point,
    threshold_schedule,
)
from .montecarlo import (
    Estimate,
    ExperimentSpec,
    azuma_empirical,
    counter_cheat_demo,
    estimate_control,
    estimate_gain,
    honest_completeness,
    run_scenario,
)

__version__ = "0.1.0"
