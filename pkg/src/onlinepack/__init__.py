"""Online submodular maximization under sparse vector packing with free disposal."""
from .core import (
    INF,
    AlgorithmParams,
    FractionalState,
    Item,
    ParameterError,
    Q,
    SparseWeightVector,
    density,
    is_feasible,
    make_params,
    max_sparsity,
)
from .engine import (
    OnlinePacker,
    ProtocolError,
    audit_state,
    observe_item,
    run_phase,
)
from .objective import Cardinality, Coverage, Modular, evaluate, marginal

__version__ = "0.1.0"
