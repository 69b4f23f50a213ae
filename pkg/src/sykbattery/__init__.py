"""SYK quantum-battery charging: closed-form resummations and exact dynamics."""

__version__ = "0.1.0"

from .analytic import (
    OptimumResult,
    PowerCurve,
    catalan,
    f_block,
    f_propagator,
    f_series_check,
    find_optimum,
    noncrossing_pairing_count,
    power_graph,
    power_X,
    power_X_gaussian,
    power_Z,
    scaling_fit,
)
from .disorder import derive_seed, sample_dense_couplings, sample_graph_couplings
from .evolve import (
    AveragedTrace,
    ChargingSpec,
    ChargingTrace,
    charging_trace,
    disorder_average,
    evolve_step,
    ground_state,
)
from .graph import (
    ConnectivityProfile,
    MajoranaGraph,
    block_connectivity,
    complete_graph,
    connectivity_profile,
    ensemble_connectivity,
    ring_graph,
    star_graph,
    watts_strogatz,
)
from .spinrep import (
    PauliString,
    PauliSum,
    anticommutator_check,
    build_battery,
    build_dense_charger,
    build_graph_charger,
    jw_majorana,
    majorana_product,
)
