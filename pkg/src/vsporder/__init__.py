"""Bayesian inference of vertex-series-parallel partial orders from rank lists."""
from .analysis import (
    average_rank,
    consensus_order,
    depth_posterior,
    edge_marginals,
    roc_auc,
    roc_reconstruction,
    savage_dickey_bf,
    waic_elpd,
)
from .counting import bottom_counts, count_le, top_counts
from .data import Actor, RankDataset, RankList, filter_lpa, parse_dataset, write_dataset
from .errors import *  # noqa: F401,F403
from .mcmc import McmcConfig, exact_posterior, run_chain
from .observation import (
    dataset_log_lik,
    qjb_log_lik,
    qjd_log_lik,
    qju_log_lik,
    simulate_dataset,
    simulate_qjb,
    simulate_qjd,
    simulate_qju,
)
from .poset import PartialOrder, find_forbidden, is_vsp, transitive_closure, transitive_reduction
from .prior import HyperPriorSpec, Hyperparams, bdt_log_prior, check_marginal_consistency, vsp_log_prior
from .trees import Bdt, Mdt, bdt_collapse_to_mdt, sample_bdt_prior, tree_to_vsp, vsp_to_mdt

__version__ = "0.1.0"
