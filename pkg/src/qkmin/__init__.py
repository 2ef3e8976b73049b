"""Query-model simulation of amplitude amplification and quantum k-minima search."""
from .errors import CapacityError, PartialResultError, SimulationError
from .oracle import (
    Dataset,
    ExclusionOracle,
    IndexSetOracle,
    KeyOrder,
    MultiThresholdOracle,
    QueryLedger,
    ThresholdOracle,
    evaluate,
    generate_dataset,
    load_dataset,
    marked_set,
    save_dataset,
    select_threshold,
)
from .sim import (
    MeasurementOutcome,
    RotationState,
    StateVector,
    apply_oracle_phase,
    grover_iterate,
    init_uniform,
    measure,
    phase_estimate_grover,
    success_probability,
)
from .algorithms import (
    FMTrace,
    RunReport,
    aa_search_known,
    aa_search_unknown,
    find_maximum,
    find_minimum,
    kminima_conventional,
    kminima_proposed,
    quantum_count,
    run_algorithm,
    search_all_marked,
    threshold_binary_search,
)

__version__ = "0.1.0"
