from .brute_force import (
    IlpAssignment,
    brute_force_closure,
    brute_force_min_cut,
    brute_force_oep,
    brute_force_oep_perturbed,
    brute_force_omp,
    brute_force_solver,
    ilp_from_states,
    ilp_is_feasible,
    ilp_objective,
    iter_feasible_states,
    states_from_ilp,
)
from .instances import OepInstance, random_dag, random_flow_network, random_knapsack, random_oep_instance
from .knapsack import (
    KnapsackInstance,
    brute_force_knapsack,
    items_from_materialization,
    knapsack_dp,
    knapsack_to_omp,
)
