"""Fluid-antenna relay uplink modeling and resource allocation.

Submodules:

* ``channel``   -- port geometry, spatial correlation, correlated sampling
* ``mvncdf``    -- multivariate normal CDF engine (quasi-Monte Carlo)
* ``outage``    -- copula best-gain CDF, AF/DF outage, scheme selection
* ``allocator`` -- SNR model, bandwidth closed form, power control
* ``harness``   -- Monte Carlo validation, benchmarks, parameter sweeps
* ``scenario``  -- JSON scenario files
* ``cli``       -- command-line entry point
"""

from .allocator import (
    AllocationResult,
    SnrTriple,
    UserConfig,
    allocate_bandwidth,
    derive_min_powers,
    optimize_powers,
    scheme_region,
    snr_af,
    snr_df,
    solve_df_subproblem,
    solve_system,
)
from .channel import (
    ChannelRealization,
    CorrelationMatrix,
    PortGrid,
    build_correlation,
    port_coords,
    port_index,
    sample_gains,
    sample_realization,
    spatial_correlation,
)
from .errors import InfeasibleError, NumericalError
from .harness import Scenario, SweepSpec, random_scenario, run_benchmark, run_sweep
from .mvncdf import MvnEstimate, MvnProblem, mvn_cdf, std_normal_quantile
from .outage import (
    CopulaConfig,
    LinkBudget,
    OutageQuery,
    OutageResult,
    Selection,
    best_gain_cdf,
    op_surface,
    outage_probabilities,
    select_scheme,
    xi_af,
    xi_df,
)

__version__ = "0.1.0"
