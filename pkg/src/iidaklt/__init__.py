"""Disordered AKLT-type matrix product states: transfer contractions, parent Hamiltonians,
correlation decay and Monte Carlo estimates of the time-reversal index."""

from .errors import CapacityError, DomainError, NumericalFailure
from .linalg import Tolerance, hermitian_lowest, nullspace, numerical_rank, orthonormalize
from .apparatus import (
    Apparatus,
    AveragedApparatus,
    LocalObservable,
    block_approximant,
    correlation_rank,
    product_apparatus,
)
from .aklt import (
    SZ,
    AmplitudeTable,
    AngleWindow,
    aklt_apparatus,
    channel_distance,
    coefficient,
    condition_number,
    gamma,
    isometry,
    kraus,
    transfer,
)
from .hamiltonian import assemble, finite_gap, ground_basis, intersection_dim, parent_term
from .disorder import DistributionSpec, McAccumulator, SeedSpec, lyapunov, rare_region_scan, sample_window
from .tasaki import (
    FillingProcessParams,
    exact_config_sum,
    geometric_process,
    regime_report,
    tasaki_value,
    z2_index_sweep,
)

__version__ = "0.1.0"
