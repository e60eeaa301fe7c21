"""Posterior summaries and model comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import logsumexp

from .errors import DegenerateTrace, EmptyTrace, EmptyWindow, InconsistentConsensus, UnknownGroup
from .mcmc import ChainTrace, effective_sample_size
from .poset import PartialOrder, depth, transitive_closure, transitive_reduction
from .prior import Dist
from .trees import tree_depth


def _relations(trace) -> tuple[list, np.ndarray]:
    """Labels and a K x n x n boolean stack of sampled relations."""
    if isinstance(trace, ChainTrace):
        labels = trace.actors
        orders = trace.vsps()
    else:
        orders = list(trace)
        if not orders:
            raise EmptyTrace("no samples")
        labels = list(orders[0].labels)
        orders = [v.reorder(labels) for v in orders]
    if not orders:
        raise EmptyTrace("trace has no samples")
    return labels, np.stack([v.relation for v in orders])


@dataclass(frozen=True)
class EdgeMarginals:
    labels: tuple
    matrix: np.ndarray
    n_samples: int
    se: np.ndarray | None = None

    def __getitem__(self, pair):
        a, b = pair
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])


def edge_marginals(trace) -> EdgeMarginals:
    """Fraction of samples in which each actor sits above each other actor.

    Also returns a Monte Carlo standard error per entry from the ESS of its indicator series.
    """
    labels, rel = _relations(trace)
    k = rel.shape[0]
    m = rel.mean(axis=0)
    se = np.zeros_like(m)
    n = len(labels)
    for i in range(n):
        for j in range(n):
            if 0.0 < m[i, j] < 1.0:
                ess = effective_sample_size(rel[:, i, j])
                se[i, j] = math.sqrt(m[i, j] * (1.0 - m[i, j]) / ess)
    return EdgeMarginals(tuple(labels), m, k, se)


def marginals_from_distribution(dist: Mapping[PartialOrder, float], labels: Sequence) -> EdgeMarginals:
    """Edge marginals of an explicit distribution over partial orders."""
    labels = list(labels)
    m = np.zeros((len(labels), len(labels)))
    for v, w in dist.items():
        m += w * v.reorder(labels).relation
    return EdgeMarginals(tuple(labels), m, 0)


@dataclass(frozen=True)
class ConsensusOrder:
    labels: tuple
    eps_weak: float
    eps_strong: float
    weak: frozenset
    strong: frozenset
    display: frozenset

    def edge_color(self, edge) -> str:
        return "red" if edge in self.strong else "black"


def retained_edges(marg: EdgeMarginals, eps: float) -> frozenset:
    ii, jj = np.nonzero(marg.matrix > eps)
    return frozenset((marg.labels[i], marg.labels[j]) for i, j in zip(ii, jj))


def consensus_order(marg: EdgeMarginals, eps_weak: float = 0.5, eps_strong: float = 0.9) -> ConsensusOrder:
    """Relations whose posterior probability exceeds the thresholds.

    The display edges are the transitive reduction of the closure of the weak set.
    Raises InconsistentConsensus when the retained relations contain a cycle.
    """
    if eps_strong < eps_weak:
        raise ValueError("eps_strong must be at least eps_weak")
    weak = retained_edges(marg, eps_weak)
    strong = retained_edges(marg, eps_strong)
    labels = marg.labels
    raw = marg.matrix > eps_weak
    two = [(labels[i], labels[j]) for i, j in zip(*np.nonzero(raw & raw.T)) if i < j]
    if two:
        raise InconsistentConsensus(f"retained relations hold in both directions for {two}")
    try:
        closed = transitive_closure(raw, labels)
    except Exception as exc:
        raise InconsistentConsensus(f"retained relations contain a cycle: {exc}") from None
    return ConsensusOrder(tuple(labels), eps_weak, eps_strong, weak, strong, transitive_reduction(closed))


def average_rank(trace, grouping: Mapping) -> dict:
    """Mean rank (1 + number of actors above) per group, with a Monte Carlo standard error."""
    labels, rel = _relations(trace)
    missing = [a for a in labels if a not in grouping]
    if missing:
        raise UnknownGroup(f"no group given for actors {missing}")
    ranks = 1 + rel.sum(axis=1, dtype=np.int64)  # K x n: column sums count actors above
    groups: dict = {}
    for idx, a in enumerate(labels):
        groups.setdefault(grouping[a], []).append(idx)
    out = {}
    for g, idx in groups.items():
        series = ranks[:, idx].mean(axis=1)
        mean = float(series.mean())
        if series.size > 1 and series.std() > 0:
            se = float(series.std(ddof=1) / math.sqrt(effective_sample_size(series)))
        else:
            se = 0.0
        out[g] = (mean, se)
    return out


def ranks_of(v: PartialOrder) -> dict:
    above = v.relation.sum(axis=0)
    return {a: int(1 + above[i]) for i, a in enumerate(v.labels)}


def depth_posterior(trace) -> np.ndarray:
    """Frequencies of depth 1..n (index d-1) across samples."""
    if isinstance(trace, ChainTrace):
        if not trace.samples:
            raise EmptyTrace("trace has no samples")
        depths = [tree_depth(s.tree) for s in trace.samples]
        n = len(trace.actors)
    else:
        orders = list(trace)
        if not orders:
            raise EmptyTrace("no samples")
        depths = [depth(v) for v in orders]
        n = orders[0].n
    counts = np.bincount(np.asarray(depths) - 1, minlength=n)
    return counts / counts.sum()


@dataclass(frozen=True)
class WaicResult:
    elpd: float
    se: float
    p_waic: float
    pointwise: np.ndarray


def waic_elpd(pointwise) -> WaicResult:
    """WAIC estimate of expected log pointwise predictive density from a K x N log-lik matrix."""
    ll = np.asarray(pointwise, dtype=float)
    if ll.ndim != 2:
        raise ValueError("pointwise log-likelihoods must be a K x N matrix")
    k, n = ll.shape
    if k < 2:
        raise DegenerateTrace("need at least two samples")
    if not np.all(np.isfinite(ll)):
        raise ValueError("log-likelihoods must be finite")
    lppd = logsumexp(ll, axis=0) - math.log(k)
    # shifting by the first draw leaves the variance unchanged but keeps constant columns exactly zero
    p = (ll - ll[0]).var(axis=0, ddof=1)
    elpd_i = lppd - p
    se = math.sqrt(n * elpd_i.var(ddof=1)) if n > 1 else float("nan")
    return WaicResult(float(elpd_i.sum()), se, float(p.sum()), elpd_i)


@dataclass(frozen=True)
class BayesFactor:
    """A ratio estimate, or a one-sided bound when its window held no samples."""

    estimate: float | None
    bound: str | None = None
    bound_value: float | None = None

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "bound": self.bound, "bound_value": self.bound_value}


@dataclass(frozen=True)
class SavageDickey:
    b_ub: BayesFactor
    b_db: BayesFactor
    b_ud: BayesFactor
    delta: float
    n_samples: int
    n_top: int
    n_bottom: int

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "n_samples": self.n_samples,
            "n_top_window": self.n_top,
            "n_bottom_window": self.n_bottom,
            "B_UB": self.b_ub.to_dict(),
            "B_DB": self.b_db.to_dict(),
            "B_UD": self.b_ud.to_dict(),
        }


def savage_dickey_bf(phi_samples, prior: Dist | None = None, delta: float = 0.02, strict: bool = False) -> SavageDickey:
    """Boundary Bayes factors for QJ-U and QJ-D against QJ-B.

    Posterior mass of phi in (1-delta, 1] and [0, delta) divided by the prior mass
    of the same windows. An empty window gives an upper bound of 1/(K * prior mass)
    instead of a number (or EmptyWindow if ``strict``).
    """
    prior = prior or Dist.uniform()
    phi = np.asarray(phi_samples, dtype=float)
    k = phi.size
    if k == 0:
        raise EmptyTrace("no phi samples")
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    mass_top = 1.0 - prior.cdf(1.0 - delta)
    mass_bot = prior.cdf(delta)
    n_top = int(np.count_nonzero(phi > 1.0 - delta))
    n_bot = int(np.count_nonzero(phi < delta))
    if strict and (n_top == 0 or n_bot == 0):
        raise EmptyWindow(f"no samples within {delta} of {'1' if n_top == 0 else '0'}")

    def ratio(count, mass):
        if count == 0:
            return BayesFactor(None, "upper", 1.0 / (k * mass))
        return BayesFactor(count / k / mass)

    b_ub = ratio(n_top, mass_top)
    b_db = ratio(n_bot, mass_bot)
    if b_ub.estimate is not None and b_db.estimate is not None:
        b_ud = BayesFactor(b_ub.estimate / b_db.estimate)
    elif b_ub.estimate is None and b_db.estimate is not None:
        b_ud = BayesFactor(None, "upper", b_ub.bound_value / b_db.estimate)
    elif b_ub.estimate is not None:
        b_ud = BayesFactor(None, "lower", b_ub.estimate / b_db.bound_value)
    else:
        b_ud = BayesFactor(None)
    return SavageDickey(b_ub, b_db, b_ud, delta, k, n_top, n_bot)


@dataclass(frozen=True)
class RocPoint:
    eps: float
    fpr: float
    tpr: float


def roc_reconstruction(true_vsp: PartialOrder, marg: EdgeMarginals, eps_grid: Sequence[float]) -> list[RocPoint]:
    """True and false positive rates of the thresholded marginals against the true closure."""
    truth = true_vsp.reorder(marg.labels).relation
    off = ~np.eye(len(marg.labels), dtype=bool)
    pos = truth & off
    neg = ~truth & off
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    out = []
    for eps in eps_grid:
        kept = marg.matrix > eps
        tpr = (kept & pos).sum() / n_pos if n_pos else float("nan")
        fpr = (kept & neg).sum() / n_neg if n_neg else float("nan")
        out.append(RocPoint(float(eps), float(fpr), float(tpr)))
    return out


def roc_auc(curve: Sequence[RocPoint]) -> float:
    """Area under the ROC curve, anchored at (0, 0) and (1, 1)."""
    pts = sorted({(0.0, 0.0), (1.0, 1.0)} | {(c.fpr, c.tpr) for c in curve})
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return float(trapezoid(ys, xs))
