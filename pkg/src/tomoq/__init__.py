"""tomoq: design and statistical quality analysis of quantum state tomography
protocols.

The library covers the full pipeline: building measurement protocols
(polyhedron projective sets, waveplate series, named literature protocols),
classifying them through the singular spectrum of the measurement matrix
(completeness, adequacy, condition number), predicting reconstruction
precision through the weighted-chi-square fidelity-loss distribution, and
validating the predictions with Poisson Monte Carlo plus maximum-likelihood
reconstruction.
"""

__version__ = "0.1.0"

from .states import (  # noqa: F401
    BlochVector,
    DensityMatrix,
    PositivityViolation,
    PurifiedState,
    SpectralModel,
    bloch_basis,
    bloch_from_density,
    concurrence_pure,
    decohered_qubit,
    density_from_bloch,
    density_from_pure,
    entropy,
    fidelity,
    fix_global_phase,
    named_state,
    purify,
    purity,
)
from .protocols import (  # noqa: F401
    PolyhedronSpec,
    Protocol,
    ProtocolRow,
    WaveplateSpec,
    b9,
    b36,
    b144,
    direction_state,
    intensities,
    named_protocol,
    normalize_exposures,
    plate_series_protocol,
    polyhedron_protocol,
    protocol_from_amplitudes,
    single_plate_protocol,
    tensor_power,
    tensor_product,
    two_arm_plate_protocol,
    unity_check,
    waveplate_unitary,
)
from .analysis import (  # noqa: F401
    AdequacyResult,
    IncompleteProtocolError,
    MeasurementMatrix,
    ProtocolAnalysis,
    PseudoInverseResult,
    adequacy_test,
    analyze,
    measurement_matrix,
    pseudo_inverse_reconstruct,
)
from .precision import (  # noqa: F401
    InformationMatrix,
    LossModel,
    MaxLossResult,
    ScanField,
    bloch_scan,
    information_matrix,
    loss_L,
    loss_cdf,
    loss_model,
    loss_moments,
    loss_quantile,
    max_loss_search,
    min_loss_bounds,
    nines,
    polyhedron_mixed_floor,
    pure_loss,
    thickness_scan,
)
from .reconstruction import (  # noqa: F401
    MLResult,
    log_likelihood,
    ml_rank_scan,
    ml_reconstruct,
)
from .simulation import (  # noqa: F401
    GofResult,
    QuantileBand,
    TrialBatch,
    gof_test,
    quantile_band,
    run_trials,
    sample_counts,
    trial_rng,
)
from . import fileio, gchi2, geometry  # noqa: F401
