"""rieszlab: a numerical laboratory for Riesz interaction kernels,
modulated energies, transport commutators, counterexample constructions,
and mean-field particle dynamics."""

__version__ = "0.1.0"

from .errors import (
    CollisionError,
    DataError,
    DomainError,
    PreconditionError,
    ResolutionError,
    RieszLabError,
    UsageError,
)
from .kernels import (
    AdmissiblePotential,
    AdmissibilityReport,
    RieszParams,
    admissible_check,
    gaussian_admissible,
    riesz_admissible,
    riesz_fourier_symbol,
    riesz_gradient,
    riesz_normalizing_constant,
    riesz_potential,
)
from .fields import (
    GridField,
    GridMeasure,
    GridSpec,
    MollifierSpec,
    ModulusReport,
    RateReport,
    bmo_seminorm,
    cubic_interpolate,
    energy_seminorm,
    field_to_csv,
    holder_zygmund_seminorm,
    load_field_binary,
    log_lipschitz_modulus_check,
    mollification_rates,
    mollify,
    save_field_binary,
    sobolev_seminorm,
    spectral_gradient,
    spectral_transform,
)
from .energy import (
    BoundConstants,
    CommutatorReport,
    CoercivityReport,
    EnergyReport,
    MollifiedSplit,
    ParticleConfig,
    SmallScaleReport,
    coercivity_report,
    commutator_An,
    defect_factor,
    defective_rhs,
    identity_field,
    modulated_energy,
    mollified_split,
    moment,
    moment_bound,
    renormalized_rhs,
    smallscale_report,
    unrenormalized_commutator,
)
from .counterexamples import (
    Cef1Instance,
    Cef2Instance,
    RatioReport,
    bmo_hilbert_batch,
    bmo_hilbert_check,
    build_cef1,
    build_cef2,
    cef1_ratio,
    cef1_sweep,
    cef2_ratio,
    corollary_variants,
)
from .dynamics import (
    CoupledRunResult,
    GronwallInput,
    GronwallResult,
    MFBoundParams,
    MFBoundResult,
    SimSetup,
    coupled_run,
    gronwall_bound,
    mf_bound_trajectory,
    simulate_particles,
    solve_meanfield,
    velocity_field,
)
