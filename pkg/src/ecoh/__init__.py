"""Energy coherence as a resource for implementing gates with energy-preserving unitaries."""

__version__ = "0.1.0"

from .errors import (
    BasisRequiredError,
    BlockShapeError,
    DimensionLimitError,
    DomainError,
    EcohError,
    InvalidPrepartitionError,
    ResonanceError,
    SchemaError,
    ShapeMismatchError,
    SupportExplosionError,
    SupportRangeError,
)
from .quantum_core import (
    CompositeLabel,
    DensityOperator,
    Hamiltonian,
    PureState,
    fidelity,
    moments,
    partial_trace,
    qfi,
    random_energy_preserving_unitary,
    tensor,
    trace_distance,
    von_neumann_entropy,
)
from .coherence import (
    EnergyDistribution,
    coherence_continuity_bound,
    energy_distribution,
    entropic_coherence,
    is_incoherent,
    local_coherence,
    pure_lift,
    refined_fannes_audenaert,
    relative_entropy,
    twirl,
)
from .tep_channels import (
    ChannelApproxReport,
    TepChannel,
    WorstCaseOptions,
    apply,
    apply_extended,
    choi_infidelity,
    mcopy_discrepancy,
    worst_case_infidelity,
)
from .battery_models import LadderBattery, SweepConfig, battery_report, ladder_sweep, qubit_ladder_channel
from .iid_entropy import (
    DiscreteRV,
    ExactReal,
    Prepartition,
    entropy_lower_bound,
    incommensurability_rank,
    maximal_span,
    sum_distribution,
)
from .bounds import (
    BoundReport,
    GateInstance,
    bound_report,
    coherence_lower_bound,
    min_energy_at_coherence,
    min_variance_at_coherence,
    r2_lambda2_search,
)
