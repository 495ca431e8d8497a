from aklt_hqmm.core.linalg import DimensionError, HermiticityError
from aklt_hqmm.core.channels import (
    KrausChannel,
    SuperOperator,
    ChannelError,
    ConvergenceError,
    LinearityError,
    power_limit,
    superop_trace,
    to_superoperator,
)
from aklt_hqmm.core.check import CheckStatus, CheckSuite, FunctionCheck, SuitePolicy
from aklt_hqmm.core.run_manager import RunManager

from aklt_hqmm.models.aklt import (
    ObservableSpec,
    SiteRangeError,
    aklt_tensors,
    build_mps_state,
    exact_oracle,
    finite_expectation,
    ground_state_energy,
    hat_map,
    spin1_operators,
)
from aklt_hqmm.models.fcs import (
    FcsTriple,
    convergence_sweep,
    correlator,
    embedded_expectation,
    omega_closed_form,
    omega_fcs_form,
    omega_local,
)
from aklt_hqmm.models.hqmm import (
    HqmmModel,
    ModelError,
    Ordering,
    OrderingError,
    aklt_causal_model,
    joint_state,
    observation_process,
)

from aklt_hqmm.utils.config_loader import ConfigLoader, ConfigParseError, ConfigValidationError
from aklt_hqmm.utils.reporting import ReportWriter, SuiteRenderer

__all__ = [
    'DimensionError',
    'HermiticityError',
    'KrausChannel',
    'SuperOperator',
    'ChannelError',
    'ConvergenceError',
    'LinearityError',
    'power_limit',
    'superop_trace',
    'to_superoperator',
    'CheckStatus',
    'CheckSuite',
    'FunctionCheck',
    'SuitePolicy',
    'RunManager',
    'ObservableSpec',
    'SiteRangeError',
    'aklt_tensors',
    'build_mps_state',
    'exact_oracle',
    'finite_expectation',
    'ground_state_energy',
    'hat_map',
    'spin1_operators',
    'FcsTriple',
    'convergence_sweep',
    'correlator',
    'embedded_expectation',
    'omega_closed_form',
    'omega_fcs_form',
    'omega_local',
    'HqmmModel',
    'ModelError',
    'Ordering',
    'OrderingError',
    'aklt_causal_model',
    'joint_state',
    'observation_process',
    'ConfigLoader',
    'ConfigParseError',
    'ConfigValidationError',
    'ReportWriter',
    'SuiteRenderer',
]
