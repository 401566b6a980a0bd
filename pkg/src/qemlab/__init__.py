"""qemlab: noisy-circuit simulation plus learned and extrapolated error mitigation."""

__version__ = "0.1.0"

from .circuits import (  # noqa: F401
    Circuit,
    GateOp,
    PauliObservable,
    append_measurement_basis,
    fold_two_qubit_gates,
    is_clifford,
    pauli_twirl,
    two_qubit_depth,
)
from .sim import (  # noqa: F401
    DensityMatrix,
    ExecutionResult,
    NoiseModel,
    SimulatorExecutor,
    IdealExecutor,
    belem_like,
    expectation,
    infidelity_to_depolarizing,
    lima_like,
    sample_counts,
    simulate,
)
