"""Statistics of finite-duration nondemolition weak measurements with postselection."""

from .core import (
    PostselectionScheme,
    SystemSpec,
    WeakValueSet,
    alpha,
    density_matrix,
    maximally_mixed,
    postselected_state,
    pure_state,
    weak_values,
)
from .dynamics import CouplingProfile, analytic_propagator, hamiltonian_phase, numeric_propagate_oracle
from .exact_stats import (
    DecoherenceModel,
    ReadoutDistribution,
    conditional_distribution,
    distribution_moments,
    exact_characteristic_function,
    joint_probability,
    postselection_probability,
)
from .expansion import (
    ExpansionContext,
    characteristic_function_k,
    characteristic_function_x,
    interpolated_distribution,
    interpolating_probability,
    mean_k_first_order,
    mean_x_first_order,
    oscillation_distribution,
    oscillation_weak_values,
    p_post_expanded,
)
from .probe import DispersionRelation, GaussianProbe, GridProbe, conditional_average, covariance, phase_space_average, wigner
from .spinhalf import BlochConfig, fig2_config, fig3_config

__version__ = "0.1.0"
