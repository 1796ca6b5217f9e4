"""Gaussian-channel model of accelerated cavities and a (2,3)-threshold
continuous-variable secret sharing protocol built on top of it."""

__version__ = "0.1.0"

from .gaussian import (
    GaussianState,
    SymplecticMap,
    apply_symplectic,
    beam_splitter,
    check_symplectic,
    coherent,
    fidelity_pure_mixed,
    homodyne_feedforward,
    partial_trace,
    phase_rotation,
    squeeze,
    squeezed_vacuum,
    symplectic_form,
    tensor,
    two_mode_squeezed_vacuum,
    vacuum,
)
from .modes import (
    BogoliubovSet,
    CavityGeometry,
    CorruptCacheError,
    ExactBogoliubov,
    ModeSums,
    TransitionFit,
    bogoliubov_exact,
    fit_transition,
    get_transition,
    kg_inner_product,
    minkowski_mode,
    mode_sums,
    phase_u,
    rindler_mode,
    segment_bogoliubov,
)
from .channel import (
    ChannelInvariants,
    PerturbativeChannel,
    apply_channel,
    channel_invariants,
    compose,
    compose_sequence,
    cp_residual,
    free_channel,
    nbar_from_sums,
    segment_channel,
    t2_from_sums,
    thermal_lossy_forms,
    thermal_lossy_via_dilation,
)
from .protocol import (
    DecoderCalibration,
    FidelityReport,
    ProtocolConfig,
    calibrate_decoder,
    collaborate_12,
    collaborate_13,
    collaborate_23,
    distribute,
    encode,
    fidelity_closed_forms,
    fidelity_report,
    figure_data,
    round_trip_channel,
    simulate_fidelity,
    transit_channel,
)
