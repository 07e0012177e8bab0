"""Pseudospectral subcritical SQG solver and determining-wavenumber harness."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    AbsorbingRadii,
    CalibrationConstants,
    DeterminingScale,
    absorbing_radii,
    admissible_l,
    calibrate,
    compute_determining_Q,
    compute_R2,
    compute_Rinfty,
    l2_envelope,
    linfty_bound,
)
from .experiments import (  # noqa: E402
    DecayDiagnostics,
    SyncResult,
    TwinConfig,
    decay_diagnostics,
    fit_decay_rate,
    force_perturbation_run,
    gronwall_check,
    threshold_sweep,
    twin_sync_run,
)
from .littlewood_paley import ShellSystem, band_project, besov_norm, chi, lowpass, shell_project, shell_spectrum  # noqa: E402
from .operators import (  # noqa: E402
    ForcingSpec,
    VelocityField,
    advection,
    advection_oracle,
    force_eval,
    forcing,
    lambda_pow,
    riesz_perp,
)
from .spectral import (  # noqa: E402
    Domain,
    FieldError,
    PhysicalField,
    SpectralField,
    from_modes,
    inner_product,
    lebesgue_norm,
    make_domain,
    random_field,
    to_physical,
    to_spectral,
)
from .timestepper import SimState, SolverError, SqgParams, cfl_dt, energy_budget, simulate, step  # noqa: E402
