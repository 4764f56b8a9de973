"""Simulator and equilibrium oracles for distributed QoS learning over
tug-of-war games."""

from .core import (
    Bounds,
    QoSTargets,
    RandomizedTargets,
    RewardField,
    ToWConditionReport,
    action_profile,
    check_tow_condition,
    evaluate_rewards,
    game_assignment,
    project,
    sample_targets,
)
from .harness import (
    AggregateStats,
    ConfigError,
    CrossCheckReport,
    ExperimentConfig,
    ExperimentResult,
    RealizationSummary,
    ScenarioConfig,
    aggregate_traces,
    cross_check,
    emit_csv,
    parse_config,
    run_experiment,
    run_tow_validation,
    serialize_config,
)
from .learner import (
    ALGORITHMS,
    EventLog,
    NoiseModel,
    PlayerRuntime,
    RoundEvents,
    StepsizeSchedule,
    TailSummary,
    Trace,
    fdtop_round,
    metatop_round,
    run_simulation,
    stepsize,
    top_round,
)
from .oracle import (
    EquilibriumReport,
    FeasibilityResult,
    OdeTrajectory,
    SpectrumSummary,
    check_feasibility,
    integrate_ode,
    jacobian_spectrum,
    minimal_equilibrium,
    power_control_equilibrium_linear,
)
from .scenarios import (
    PowerControlInstance,
    SensorNetworkInstance,
    TaskAllocationInstance,
    gen_power_control,
    gen_sensor_network,
    gen_task_allocation,
    instance_fingerprint,
    instance_from_config,
    instance_to_config,
    power_control_reward,
    sensor_delivery_probability_exact,
    sensor_feedback_sample,
    sensor_reward,
    task_allocation_reward,
)

__version__ = "0.1.0"
