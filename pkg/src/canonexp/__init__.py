"""Cluster expansion of the canonical partition function.

Labeled-graph combinatorics, abstract polymer cluster sums with convergence
certificates, numerical graph activities and Mayer coefficients, the
free-energy series on the periodic box, and independent brute-force oracles.
"""

from .graphs import (
    BlockTree,
    LabeledGraph,
    SizeLimitError,
    articulation_points,
    block_decomposition,
    canonical_form,
    count_connected,
    count_two_connected,
    enumerate_connected,
    enumerate_graphs,
    enumerate_trees,
    enumerate_two_connected,
    graph_from_text,
    graph_to_text,
    is_connected,
    is_two_connected,
    signed_connected_spanning_sum,
)
from .polymers import (
    ClusterSum,
    FactorizationError,
    KPCertificate,
    MultiIndex,
    PolymerSystem,
    ProductStructure,
    cluster_log_sum,
    kp_condition_check,
    partition_function_direct,
    pinned_cluster_bound,
    ursell_coefficient,
    ursell_via_log_derivative,
)
from .potentials import (
    BoxGeometry,
    GaussianPotential,
    HardCorePotential,
    PairPotential,
    SquareWellPotential,
    StabilityCounterexample,
    TruncatedLennardJonesPotential,
    ZeroPotential,
    c_beta,
    c_beta_box,
    make_potential,
    mayer_f,
    periodize,
    stability_check,
)
from .integrals import (
    IntegralResult,
    ZetaEvaluator,
    b_n_connected,
    beta_n,
    tree_graph_bound,
    tree_weight_closed_form,
    zeta_vertex,
)
from .expansion import (
    ExpansionParams,
    SeriesReport,
    activity_inversion,
    b_factor,
    block_cancellation_residuals,
    convergence_certificate,
    f_coefficient,
    free_energy_density,
    log_Z_canonical,
    p_factor,
    pressure_activity_series,
    thermo_limit_sweep,
    virial_pressure,
)
from .oracles import (
    AuditReport,
    OracleResult,
    brute_force_Xi,
    brute_force_Z,
    compare_expansion_vs_oracle,
    tonks_exact_Z,
)

__version__ = "0.1.0"
