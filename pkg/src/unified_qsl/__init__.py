"""Unified quantum speed limits: MT, generalized ML and dual GML bounds.

Includes a truncated Fock-space simulator for bosonic states and a simulated
qubit-swap tomography chain. Units: hbar = 1, energies in angular frequency.
"""

from .bounds import (
    DEFAULT_P_GRID,
    BoundCurve,
    BoundFamily,
    BoundKind,
    TwoLevelState,
    dual_gml_overlap_bound,
    gml_constraint_residual,
    gml_overlap_bound,
    inverse_gml_bound,
    mt_overlap_bound,
    quadratic_gml_closed_form,
    tight_p,
    two_level_first_hit_time,
    two_level_overlap,
    unified_bound_time,
    unified_overlap_envelope,
)
from .errors import QSLError
from .fock import (
    DensityMatrix,
    FockState,
    WignerGrid,
    coherent_state,
    density_overlap,
    displacement_matrix,
    evolve_free,
    overlap,
    spectrum_of_state,
    squeezed_coherent_state,
    wigner,
)
from .spectra import (
    EnergySpectrum,
    MomentSummary,
    Regime,
    classify_regime,
    coherent_moments,
    dual_moment_Ep,
    moment_Ep,
    orthogonality_times,
    squeezed_moments,
)
from .tomography import (
    DisplacedRecord,
    SwapSignal,
    displaced_diagonals,
    fidelity,
    fit_diagonals,
    reconstruct_density,
    simulate_swap_signal,
)

__version__ = "0.1.0"
