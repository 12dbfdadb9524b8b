"""Expectation-value samplers: quantum circuits as generative models.

A model maps uniform random inputs through a parameterized circuit and reads
out a vector of observable expectations; the induced output law is shaped by
fitting circuits to triangular transport maps of a target density.  The
package covers the statevector simulator, reuploading circuits and their
fits, grid densities and transport maps, the universal product/dense and
restricted simplex encoders, exact and shot-based samplers, Wasserstein and
KS metrics, and expressivity diagnostics (primary-mapping rank, Fourier
spectra, feasibility checks).
"""

from .errors import FitDivergenceError, ValidationError
from .rng import derive_seed, keyed_generator, splitmix64
from .circuits import (
    MAX_DENSE_QUBITS,
    MAX_STATE_QUBITS,
    Binding,
    GateOp,
    Observable,
    ParameterizedCircuit,
    SpectralSummary,
    StateVector,
    circuit_unitary,
    expectation,
    expectation_batch,
    pauli_basis,
    pauli_coefficients,
    pauli_label_matrix,
    run_circuit,
    run_circuit_batch,
    spectral_summary,
)
from .reuploading import (
    FLIPPED_Z,
    PAULI_Z,
    FitConfig,
    FitResult,
    ReuploadingCircuit,
    amplitude_target_transform,
    build_reuploading,
    evaluate_model,
    fit_grid_points,
    fit_to_function,
    model_gradient,
    states_on_grid,
    target_from_amplitude,
    values_on_grid,
)
from .target_maps import (
    GridDensity,
    TriangularMap,
    build_grid_density,
    build_triangular_map,
    default_resolution,
    load_grid_density,
    map_forward,
    sample_via_map,
    save_grid_density,
    truncate_density,
)
from .generators import (
    EvsModel,
    PREP_MODES,
    StatePrepProgram,
    amplitude_prep,
    build_dense_encoder,
    build_product_encoder,
    build_simplex_encoder,
    default_fit_config,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
)
from .samplers import (
    SampleSet,
    ShotConfig,
    gaussian_noise_model,
    load_samples,
    required_shots,
    sample_exact,
    sample_with_shots,
    save_samples,
    shot_estimates,
)
from .metrics import (
    MetricReport,
    W1_EXACT_CAP,
    ks_marginals,
    w1_1d,
    w1_exact,
    w1_sliced,
)
from .analysis import (
    DEFAULT_Q_GRID,
    FeasibilityCheck,
    FeasibilityReport,
    FourierSpectrum,
    PrimaryMappingReport,
    binary_entropy,
    budget_coefficient,
    check_feasibility,
    circuit_output_function,
    covariance_rank,
    fourier_coefficients,
    observable_covariance,
    primary_covariance,
    primary_map_batch,
    primary_map_eval,
    random_encoding,
)
from . import families
from .families import (
    TARGET_FAMILIES,
    bimodal_1d,
    dirichlet_projected,
    gaussian_2d_correlated,
    gaussian_nd,
    product_gaussians_2d,
    step_1d,
    truncated_exponential_1d,
    uniform_1d,
)

__version__ = "0.1.0"
