"""Priors over BDTs, VSPs and MDTs, plus hyperpriors for (q, p, phi)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.special import expit, logit, logsumexp

from .errors import OracleBoundExceeded, OutOfSupport
from .poset import POSET_ENUMERATION_BOUND, enumerate_vsps, restrict
from .trees import Bdt, _Tree, sample_bdt_prior, sp_clusters, tree_depth, vsp_to_mdt


@lru_cache(maxsize=None)
def catalan(s: int) -> int:
    if s < 0:
        raise ValueError("s must be non-negative")
    return math.comb(2 * s, s) // (s + 1)


@lru_cache(maxsize=None)
def double_factorial(k: int) -> int:
    """k!! for odd or even k >= -1 (with (-1)!! = 0!! = 1)."""
    if k < -1:
        raise ValueError("k must be >= -1")
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@lru_cache(maxsize=4096)
def log_odd_double_factorial(m: int) -> float:
    """log((2m-1)!!) for m >= 0."""
    if m <= 0:
        return 0.0
    if m < 200:
        return math.log(double_factorial(2 * m - 1))
    return math.lgamma(2 * m + 1) - m * math.log(2.0) - math.lgamma(m + 1)


@lru_cache(maxsize=4096)
def log_catalan(s: int) -> float:
    if s < 200:
        return math.log(catalan(s))
    return math.lgamma(2 * s + 1) - 2 * math.lgamma(s + 1) - math.log(s + 1)


def _xlog(k: int, x: float) -> float:
    # k*log(x) with the convention 0*log(0) = 0
    if k == 0:
        return 0.0
    if x <= 0.0:
        return -math.inf
    return k * math.log(x)


def log_n_topologies(n: int) -> float:
    """log of (2n-3)!!, the number of rooted binary leaf-labelled topologies."""
    return log_odd_double_factorial(n - 1)


def bdt_log_prior_counts(n: int, n_series: int, q: float) -> float:
    return _xlog(n_series, q / 2.0) + _xlog(n - 1 - n_series, 1.0 - q) - log_n_topologies(n)


def bdt_log_prior(t: Bdt, q: float) -> float:
    """log[(q/2)^S (1-q)^(n-1-S) / (2n-3)!!] for a BDT with S series nodes."""
    return bdt_log_prior_counts(t.n, t.n_series(), q)


def bdt_multiplicity(tree: _Tree) -> int:
    """Number of BDTs representing the same VSP as ``tree``."""
    if isinstance(tree, Bdt):
        cs = sp_clusters(tree)
        out = 1
        for c in cs.p_cluster_sizes:
            out *= double_factorial(2 * c - 1)
        for c in cs.s_cluster_sizes:
            out *= catalan(c)
        return out
    out = 1
    for u in tree.preorder():
        c = tree.children[u]
        if c is None:
            continue
        k = len(c)
        out *= double_factorial(2 * k - 3) if tree.kind[u] == "P" else catalan(k - 1)
    return out


def vsp_log_prior(m: _Tree, q: float) -> float:
    """Prior probability of the VSP represented by MDT ``m``, on the log scale."""
    total = -log_n_topologies(m.n)
    for u in m.preorder():
        c = m.children[u]
        if c is None:
            continue
        k = len(c)
        if m.kind[u] == "P":
            total += _xlog(k - 1, 1.0 - q) + log_odd_double_factorial(k - 1)
        else:
            total += _xlog(k - 1, q / 2.0) + log_catalan(k - 1)
    return total


@lru_cache(maxsize=8)
def _consistency_tables(n: int):
    # q-independent part: MDTs of all VSPs on [n] and, for each dropped actor,
    # the index of every restriction among the VSPs on the remaining actors
    labels = tuple(range(1, n + 1))
    full = enumerate_vsps(n, labels)
    full_mdts = [vsp_to_mdt(v) for v in full]
    per_drop = []
    for drop in labels:
        o = tuple(a for a in labels if a != drop)
        small = enumerate_vsps(n - 1, o)
        where = {w: i for i, w in enumerate(small)}
        idx = np.array([where[restrict(v, o)] for v in full])
        per_drop.append(([vsp_to_mdt(w) for w in small], idx))
    return full_mdts, per_drop


def check_marginal_consistency(n: int, q: float) -> float:
    """Max |pi_o(w) - sum over v with v[o]=w of pi(v)| over o = [n] minus one actor."""
    if n > POSET_ENUMERATION_BOUND:
        raise OracleBoundExceeded(f"n={n} exceeds enumeration bound {POSET_ENUMERATION_BOUND}")
    if n < 2:
        return 0.0
    full_mdts, per_drop = _consistency_tables(n)
    pv = np.exp([vsp_log_prior(m, q) for m in full_mdts])
    worst = 0.0
    for small, idx in per_drop:
        summed = np.bincount(idx, weights=pv, minlength=len(small))
        direct = np.exp([vsp_log_prior(w, q) for w in small])
        worst = max(worst, float(np.abs(direct - summed).max()))
    return worst


# hyperpriors

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _xlog_real(k: float, x: float) -> float:
    if k == 0.0:
        return 0.0
    if x <= 0.0:
        return -math.inf if k > 0 else math.inf
    return k * math.log(x)


@dataclass(frozen=True)
class Dist:
    """Prior on a probability: ``logit-normal`` (mean, sd) or ``beta`` (a, b)."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind == "logit-normal":
            if len(self.params) != 2 or not self.params[1] > 0:
                raise ValueError("logit-normal needs (mean, sd > 0)")
        elif self.kind == "beta":
            if len(self.params) != 2 or min(self.params) <= 0:
                raise ValueError("beta needs (a > 0, b > 0)")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls) -> "Dist":
        return cls("beta", (1.0, 1.0))

    def logpdf(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise OutOfSupport(f"{x} is outside [0, 1]")
        a, b = self.params
        if self.kind == "beta":
            # plain-math version of the beta log density; called every sweep
            lnorm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
            return lnorm + _xlog_real(a - 1.0, x) + _xlog_real(b - 1.0, 1.0 - x)
        if x in (0.0, 1.0):
            return -math.inf
        z = (math.log(x / (1.0 - x)) - a) / b
        return -0.5 * z * z - math.log(b) - _HALF_LOG_2PI - math.log(x) - math.log1p(-x)

    def cdf(self, x: float) -> float:
        if self.kind == "beta":
            return float(stats.beta.cdf(x, *self.params))
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        mu, sd = self.params
        return float(stats.norm.cdf(logit(x), mu, sd))

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "beta":
            return rng.beta(*self.params, size=size)
        mu, sd = self.params
        return expit(rng.normal(mu, sd, size=size))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Dist":
        return cls(d["kind"], tuple(float(x) for x in d["params"]))


@dataclass(frozen=True)
class Hyperparams:
    q: float
    p: float
    phi: float = 1.0

    def __post_init__(self):
        for name in ("q", "p", "phi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise OutOfSupport(f"{name}={v} is outside [0, 1]")


@dataclass(frozen=True)
class HyperPriorSpec:
    eta_mean: float = 1.0
    eta_sd: float = 1.5
    p_prior: Dist = field(default_factory=lambda: Dist("logit-normal", (0.0, 1.5)))
    phi_prior: Dist = field(default_factory=Dist.uniform)

    def __post_init__(self):
        if not self.eta_sd > 0:
            raise ValueError("eta_sd must be positive")

    @property
    def q_prior(self) -> Dist:
        return Dist("logit-normal", (self.eta_mean, self.eta_sd))

    def to_dict(self) -> dict:
        return {
            "eta_mean": self.eta_mean,
            "eta_sd": self.eta_sd,
            "p_prior": self.p_prior.to_dict(),
            "phi_prior": self.phi_prior.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperPriorSpec":
        kw = {}
        if "eta_mean" in d:
            kw["eta_mean"] = float(d["eta_mean"])
        if "eta_sd" in d:
            kw["eta_sd"] = float(d["eta_sd"])
        if "p_prior" in d:
            kw["p_prior"] = Dist.from_dict(d["p_prior"])
        if "phi_prior" in d:
            kw["phi_prior"] = Dist.from_dict(d["phi_prior"])
        return cls(**kw)


def hyper_log_prior(h: Hyperparams, spec: HyperPriorSpec = HyperPriorSpec(), *, with_phi: bool = True) -> float:
    out = spec.q_prior.logpdf(h.q) + spec.p_prior.logpdf(h.p)
    if with_phi:
        out += spec.phi_prior.logpdf(h.phi)
    return out


def sample_hyper(spec: HyperPriorSpec, rng: np.random.Generator) -> Hyperparams:
    return Hyperparams(
        q=float(spec.q_prior.sample(rng)),
        p=float(spec.p_prior.sample(rng)),
        phi=float(spec.phi_prior.sample(rng)),
    )


def prior_depth_histogram(n: int, spec: HyperPriorSpec, draws: int, rng: np.random.Generator, q: float | None = None) -> np.ndarray:
    """Frequencies of depth 1..n (index d-1) under the prior; q drawn per tree unless fixed."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    counts = np.zeros(n, dtype=np.int64)
    qs = spec.q_prior.sample(rng, size=draws) if q is None else np.full(draws, q)
    for qi in qs:
        counts[tree_depth(sample_bdt_prior(n, float(qi), rng)) - 1] += 1
    return counts / draws


def vsp_log_prior_by_enumeration(v_key, trees, q: float) -> float:
    """logsumexp of BDT priors over the given trees whose key matches ``v_key`` (oracle)."""
    vals = [bdt_log_prior(t, q) for t in trees if t.key() == v_key]
    return float(logsumexp(vals)) if vals else -math.inf
