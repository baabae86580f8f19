"""Harmonic-oscillator quantum battery coupled to a bosonic bath.

Two dynamics backends (exact joint Fock diagonalization and exact Gaussian
moment propagation) feed a common set of battery metrics: ergotropy and its
coherent and incoherent parts, l1 coherence, charging power and trace-distance
revivals.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .bath import (
    BathSpec,
    CouplingForm,
    ModelParams,
    QuadraticForm,
    build_total_hamiltonian,
    coupling_operator,
    discretize_bath,
    quadratic_form,
    spectral_density,
    thermal_covariance,
    thermal_state_fock,
)
from .errors import (
    CapacityError,
    ConfigError,
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidParameterError,
    PreconditionError,
    QBMError,
    SelfCheckError,
    TruncationOverflowError,
)
from .fock_dynamics import purity, simulate_reduced
from .gaussian import (
    GaussianState,
    SymplecticPropagator,
    evolve_gaussian,
    gaussian_ergotropy,
    gaussian_to_fock,
    reduce_to_system,
    simulate_gaussian,
    symplectic_propagator,
)
from .hilbert import (
    DensityMatrix,
    Operator,
    destroy,
    evolve_unitary,
    herm_eig,
    partial_trace,
    quadratures,
    tensor,
    trace_distance,
)
from .memory import DistanceTrajectory, blp_measure, detect_revivals, distance_trajectory
from .metrics import (
    ErgotropyReport,
    PassiveDecomposition,
    average_power,
    coherent_ergotropy,
    ergotropy,
    ergotropy_report,
    incoherent_ergotropy,
    instantaneous_power,
    l1_coherence,
    oscillator_hamiltonian,
    passive_state,
)
from .trajectory import Trajectory, uniform_grid
