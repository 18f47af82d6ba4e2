"""Repair noisy pairwise distances into metrics and ultrametrics under the l0 objective."""
from .core import (DistanceMatrix, LevelMap, RepairResult, Triangle, WeightedInstance, build_level_map,
                   is_metric, is_ultrametric, l0_cost, metric_violations, ultrametric_violations)
from .corrclust import (AgreementParams, Clustering, SignedGraph, agree, agreement_cluster, cc_brute_force,
                        cc_cost, is_everywhere_dense, is_important_group)
from .instances import (gen_hypercube, gen_planted_cc, gen_random_metric_noise, gen_random_ultra_noise,
                        gen_star)
from .lp_round import (LPSolution, UltrametricLP, build_lp, choose_radius, cluster_partition,
                       hierarchical_cluster, region_quantities, solve_lp)
from .oracle import exact_mvd, exact_umvd, metric_completion, ultrametric_completion
from .pivot import InsufficientPivots, PivotSource, PivotTrace, mvd_pivot, pivot_clusters, umvd_pivot
from .umvd_cc import build_cc_level, umvd_constant

__version__ = "0.1.0"
