"""Hypersingular Riesz-gas toolkit.

N-point systems in R^d with pair interaction |x - y|^{-s}, s > d, plus an
external field: energy evaluation, minimization, Gibbs sampling at the
N^{-s/d}-scaled temperature, certified lattice zeta sums, and the
statistics that connect desk-scale runs to the known N -> infinity laws.
"""

__version__ = "0.1.0"

from .cells import CellIndex, build_cell_index
from .energy import (
    RieszParams,
    equal_spacing_energy,
    gradient,
    move_delta,
    pair_sum_energy,
    pair_sum_energy_cells,
    total_energy,
    truncated_interaction,
    window_energy_density,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DomainError,
    LatticeError,
    RieszError,
    SingularEnergyError,
)
from .fields import (
    AxisPolynomial,
    Box,
    FieldSpec,
    FullSpace,
    Quadratic,
    Region,
    Tabulated,
    ZeroField,
    unit_box,
    zero_field_on_box,
)
from .lattice import (
    BravaisLattice,
    ZetaResult,
    epstein_hurwitz_grad,
    epstein_hurwitz_zeta,
    epstein_zeta,
    lattice_preset,
    lattice_ws,
    periodic_config_ws,
    periodic_energy,
)
from .optimize import (
    CsdEstimate,
    MinimizeReport,
    estimate_csd,
    minimize_confined,
    minimize_periodic,
    stratified_jitter,
)
from .points import (
    PointConfiguration,
    finite_density,
    points_from_csv,
    points_to_csv,
    rescale,
    translate,
    window_restrict,
)
from .rng import split_rng
from .sampler import (
    ChainSpec,
    SampleArchive,
    log_unnormalized_density,
    read_archive,
    run_chain,
    tune_proposal,
    write_archive,
)
from .stats import (
    CorrelationEstimate,
    EmpiricalHistogram,
    LimitMeasure,
    beta_infinity_functional,
    empirical_measure,
    nn_spacing_stats,
    pooled_empirical_measure,
    rescaled_configuration,
    separation_bins,
    solve_limit_measure,
    tagged_local_configs,
    total_variation,
    two_point_correlation,
    ws_from_correlation,
)
