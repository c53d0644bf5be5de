"""Finite truncations of spectral triples on crossed products.

The package builds concrete matrix models for Dirac operators on crossed
products by equicontinuous group actions and measures everything that is
measurable about them at a finite truncation level: commutator seminorms,
equicontinuity constants, state-space distances, Fourier cut-downs,
spectra and summability profiles.
"""

from .errors import (
    CapacityError,
    CommutationError,
    DegeneracyError,
    InputError,
    InvarianceError,
    ParityError,
    ScheduleError,
)
from .matops import herm_eig, herm_spectrum, kron_dirsum, opnorm
from .algebra import (
    AlgState,
    Filtration,
    GNSData,
    MultiMatrixAlgebra,
    ci_dirac,
    cyclic_product_filtration,
    default_schedule,
    gns,
    layer_ranks,
    ortho_layers,
    point_state,
    uhf_filtration,
    uniform_state,
)
from .triple import (
    SpectralTriple,
    nondegenerate,
    product_odd,
    seminorm,
    spectrum,
    summability_report,
    tensor_even,
)
from .groupgeo import (
    GroupWindowAlgebra,
    LatticeWindow,
    LengthFunction,
    group_window_triple,
    length_matrix,
    m_l_operator,
    properness_report,
    translation_spread,
)
from .dynamics import (
    ActionModel,
    Certificate,
    FiniteMetricAction,
    LevelAction,
    OdometerSpec,
    dual_automorphism,
    epsilon_chain_partition,
    equicont_constant,
    equicontinuity_sup,
    inner_convergence_diagnostic,
    isometry_check,
    odometer_encode,
    odometer_metric_action,
    odometer_step,
    product_automorphism,
)
from .crossed import (
    CovariantRep,
    CrossedElement,
    commuting_action_bound,
    covariant_rep,
    crossed_dirac_even,
    crossed_dirac_odd,
    crossed_half_matrix,
    crossed_seminorms,
    cutdown,
    direct_zd_dirac,
    fourier_coefficient,
    iterate_zd,
)
from .qmetric import (
    StatePair,
    connes_distance,
    connes_distance_bruteforce,
    effective_metric,
    lip_stabilization_report,
    wasserstein_lp,
)

__version__ = "0.1.0"
