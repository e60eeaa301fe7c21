"""Metropolis-Hastings samplers over BDTs and MDTs with hyperparameter updates."""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .data import RankDataset, dataset_hash
from .errors import InterruptedRun, OracleBoundExceeded
from .moves import (
    bdt_flip,
    bdt_spr,
    local_targets,
    mdt_apply,
    mdt_nonroot,
    mdt_plan,
    mdt_proposal_prob,
    mdt_targets,
)
from .observation import ListEvaluator, normalize_model
from .poset import PartialOrder, enumerate_vsps
from .prior import HyperPriorSpec, bdt_log_prior, sample_hyper, vsp_log_prior
from .trees import Bdt, Mdt, bdt_collapse_to_mdt, sample_bdt_prior, vsp_to_mdt

TRACE_FORMAT_VERSION = 1
EXACT_POSTERIOR_BOUND = 4
MOVE_NAMES = ("local", "global", "flip", "mdt", "q", "p", "phi")


@dataclass
class McmcConfig:
    iterations: int = 1000
    thin: int = 10
    burn_in: int | None = None
    seed: int | None = None
    parameterization: str = "bdt"
    model: str = "qju"
    global_to_local_ratio: int | None = None
    step_q: float = 0.5
    step_p: float = 0.5
    step_phi: float = 0.5
    init: dict = field(default_factory=dict)
    check_every: int = 1000
    cache_size: int = 20000

    def __post_init__(self):
        self.parameterization = str(self.parameterization).lower()
        if self.parameterization not in ("bdt", "mdt"):
            raise ValueError("parameterization must be 'bdt' or 'mdt'")
        self.model = normalize_model(self.model)
        if self.burn_in is None:
            self.burn_in = self.iterations // 5
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        for name in ("step_q", "step_p", "step_phi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.global_to_local_ratio is not None and self.global_to_local_ratio < 0:
            raise ValueError("global_to_local_ratio must be non-negative")
        unknown = set(self.init) - {"q", "p", "phi"}
        if unknown:
            raise ValueError(f"unknown init keys {sorted(unknown)}")

    @property
    def n_samples(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def to_dict(self) -> dict:
        return asdict(self)


class Posterior:
    """Data, model and prior for one chain, with an LRU cache of likelihoods by VSP."""

    def __init__(self, lists: Sequence[Sequence], actors: Sequence, model: str, spec: HyperPriorSpec, parameterization: str, cache_size: int = 20000):
        self.lists = [tuple(x) for x in lists]
        self.actors = list(actors)
        self.model = normalize_model(model)
        self.spec = spec
        self.parameterization = parameterization
        self.cache_size = cache_size
        self._cache: OrderedDict = OrderedDict()

    def fixed_phi(self):
        return {"qju": 1.0, "qjd": 0.0}.get(self.model)

    def log_lik(self, tree, p: float, phi: float, fresh: bool = False):
        if fresh or self.cache_size <= 0:
            return ListEvaluator(tree).dataset(self.lists, self.model, p, phi)
        k = (tree.key(), p, phi)
        hit = self._cache.get(k)
        if hit is not None:
            self._cache.move_to_end(k)
            return hit
        val = ListEvaluator(tree).dataset(self.lists, self.model, p, phi)
        self._cache[k] = val
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return val

    def tree_log_prior(self, tree, q: float) -> float:
        if self.parameterization == "bdt":
            return bdt_log_prior(tree, q)
        return vsp_log_prior(tree, q)

    def hyper_log_prior(self, q, p, phi) -> float:
        out = self.spec.q_prior.logpdf(q) + self.spec.p_prior.logpdf(p)
        if self.model == "qjb":
            out += self.spec.phi_prior.logpdf(phi)
        return out


@dataclass
class ChainState:
    tree: Bdt | Mdt
    q: float
    p: float
    phi: float
    log_prior_tree: float
    log_lik: float
    per_list: np.ndarray
    post: Posterior
    counts: dict = field(default_factory=lambda: {k: [0, 0] for k in MOVE_NAMES})

    @classmethod
    def create(cls, tree, q, p, phi, post: Posterior) -> "ChainState":
        ll, per = post.log_lik(tree, p, phi)
        return cls(tree, q, p, phi, post.tree_log_prior(tree, q), ll, per, post)

    @property
    def log_prior(self) -> float:
        return self.log_prior_tree + self.post.hyper_log_prior(self.q, self.p, self.phi)

    @property
    def log_post(self) -> float:
        return self.log_prior + self.log_lik

    def _tally(self, name, accepted):
        c = self.counts[name]
        c[1] += 1
        c[0] += int(accepted)

    def _try_tree(self, name, new_tree, log_q_ratio, rng) -> bool:
        """MH step to ``new_tree``; ``log_q_ratio`` is log q(old|new) - log q(new|old)."""
        lp = self.post.tree_log_prior(new_tree, self.q)
        if lp == -math.inf:
            self._tally(name, False)
            return False
        ll, per = self.post.log_lik(new_tree, self.p, self.phi)
        log_a = lp + ll - self.log_prior_tree - self.log_lik + log_q_ratio
        ok = _accept(log_a, rng)
        if ok:
            self.tree, self.log_prior_tree, self.log_lik, self.per_list = new_tree, lp, ll, per
        self._tally(name, ok)
        return ok


def _accept(log_a: float, rng) -> bool:
    if log_a >= 0.0:
        return True
    if log_a == -math.inf or math.isnan(log_a):
        return False
    return math.log(rng.random()) < log_a


def bdt_type_update(state: ChainState, rng) -> ChainState:
    """Flip a uniformly chosen internal node between P and S."""
    t = state.tree
    internal = t.internal_nodes()
    if not internal:
        return state
    u = internal[int(rng.random() * len(internal))]
    if t.kind[u] == "P":
        new = bdt_flip(t, u, rng.random() < 0.5)
        ratio = math.log(2.0)
    else:
        new = bdt_flip(t, u)
        ratio = -math.log(2.0)
    state._try_tree("flip", new, ratio, rng)
    return state


def bdt_edge_move(state: ChainState, scope: str, rng) -> ChainState:
    """Prune-and-regraft move; ``scope`` is 'global' or 'local'."""
    t = state.tree
    if t.n <= 2:
        return state
    nodes = t.preorder()
    cand = [u for u in nodes if u != t.root]
    x = cand[int(rng.random() * len(cand))]
    upper = rng.random() < 0.5
    if scope == "global":
        targets = [u for u in nodes if u != x]
        target = targets[int(rng.random() * len(targets))]
        new = bdt_spr(t, x, target, upper)
        if new is None:
            state._tally("global", False)
            return state
        state._try_tree("global", new, 0.0, rng)
        return state
    targets = local_targets(t, x)
    if not targets:
        state._tally("local", False)
        return state
    target = targets[int(rng.random() * len(targets))]
    new = bdt_spr(t, x, target, upper)
    back = len(local_targets(new, x))
    state._try_tree("local", new, math.log(len(targets)) - math.log(back), rng)
    return state


_RHO_CACHE: OrderedDict = OrderedDict()
_RHO_CACHE_SIZE = 50000


def _rho(m: Mdt, m_new: Mdt) -> float:
    k = (m.key(), m_new.key())
    v = _RHO_CACHE.get(k)
    if v is None:
        v = mdt_proposal_prob(m, m_new)
        _RHO_CACHE[k] = v
        if len(_RHO_CACHE) > _RHO_CACHE_SIZE:
            _RHO_CACHE.popitem(last=False)
    return v


def mdt_edge_move(state: ChainState, rng) -> ChainState:
    """Regraft a uniform subtree at a uniform target in MDT space."""
    m = state.tree
    cand = mdt_nonroot(m)
    if not cand:
        return state
    x = cand[int(rng.random() * len(cand))]
    targets = mdt_targets(m, x)
    i = targets[int(rng.random() * len(targets))]
    res = mdt_plan(m, x, i)
    if res is None:
        state._tally("mdt", False)
        return state
    pruned, plan, weights = res
    opt = _pick(weights, rng)
    new = mdt_apply(pruned, x, plan, opt, inplace=True)
    if new.key() == m.key():
        state._tally("mdt", True)
        state.tree = new
        return state
    fwd = _rho(m, new)
    rev = _rho(new, m)
    state._try_tree("mdt", new, math.log(rev) - math.log(fwd), rng)
    return state


def _pick(weights, rng) -> int:
    r = rng.random()
    acc = 0.0
    for k, w in enumerate(weights):
        acc += w
        if r < acc:
            return k
    return len(weights) - 1


def _logit_step(value: float, step: float, rng) -> float | None:
    eta = math.log(value / (1.0 - value)) + step * rng.standard_normal()
    new = 1.0 / (1.0 + math.exp(-eta)) if eta > -700 else 0.0
    if not 0.0 < new < 1.0:
        return None
    return new


def _jac(x: float) -> float:
    return math.log(x) + math.log1p(-x)


def hyper_updates(state: ChainState, config: McmcConfig, rng) -> ChainState:
    """Logit-scale random-walk updates for q, then p, then phi (QJ-B only)."""
    post = state.post
    spec = post.spec
    if config.step_q > 0:
        new = _logit_step(state.q, config.step_q, rng)
        ok = False
        if new is not None:
            lp_new = post.tree_log_prior(state.tree, new)
            log_a = (lp_new + spec.q_prior.logpdf(new) + _jac(new)) - (
                state.log_prior_tree + spec.q_prior.logpdf(state.q) + _jac(state.q)
            )
            ok = _accept(log_a, rng)
            if ok:
                state.q, state.log_prior_tree = new, lp_new
        state._tally("q", ok)
    if config.step_p > 0:
        new = _logit_step(state.p, config.step_p, rng)
        ok = False
        if new is not None:
            ll, per = post.log_lik(state.tree, new, state.phi)
            log_a = (ll + spec.p_prior.logpdf(new) + _jac(new)) - (
                state.log_lik + spec.p_prior.logpdf(state.p) + _jac(state.p)
            )
            ok = _accept(log_a, rng)
            if ok:
                state.p, state.log_lik, state.per_list = new, ll, per
        state._tally("p", ok)
    if post.model == "qjb" and config.step_phi > 0:
        new = _logit_step(state.phi, config.step_phi, rng)
        ok = False
        if new is not None:
            ll, per = post.log_lik(state.tree, state.p, new)
            log_a = (ll + spec.phi_prior.logpdf(new) + _jac(new)) - (
                state.log_lik + spec.phi_prior.logpdf(state.phi) + _jac(state.phi)
            )
            ok = _accept(log_a, rng)
            if ok:
                state.phi, state.log_lik, state.per_list = new, ll, per
        state._tally("phi", ok)
    return state


def sweep(state: ChainState, config: McmcConfig, rng) -> ChainState:
    n = state.tree.n
    n_local = n if config.global_to_local_ratio is None else config.global_to_local_ratio
    if config.parameterization == "bdt":
        if n > 2:
            for _ in range(n_local):
                bdt_edge_move(state, "local", rng)
            bdt_edge_move(state, "global", rng)
        bdt_type_update(state, rng)
    else:
        for _ in range(max(n_local, 1)):
            mdt_edge_move(state, rng)
    hyper_updates(state, config, rng)
    return state


def check_state(state: ChainState, tol: float = 1e-9):
    """Recompute cached prior and likelihood from scratch; raise if they drifted."""
    ll, per = state.post.log_lik(state.tree, state.p, state.phi, fresh=True)
    lp = state.post.tree_log_prior(state.tree, state.q)
    for cached, fresh in ((state.log_lik, ll), (state.log_prior_tree, lp)):
        if not (cached == fresh or abs(cached - fresh) <= tol * max(1.0, abs(fresh))):
            raise RuntimeError(f"cached log density {cached} differs from recomputed {fresh}")
    state.tree.validate()


@dataclass
class Sample:
    iteration: int
    tree: Mdt
    q: float
    p: float
    phi: float
    log_prior: float
    log_lik: float
    per_list: tuple


@dataclass
class ChainTrace:
    header: dict
    samples: list
    acceptance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def actors(self) -> list:
        return [a["id"] for a in self.header["actors"]]

    @property
    def model(self) -> str:
        return self.header["model"]

    def values(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def pointwise(self) -> np.ndarray:
        """K x N matrix of per-list log likelihoods."""
        return np.array([s.per_list for s in self.samples], dtype=float).reshape(len(self.samples), -1)

    def vsps(self) -> list[PartialOrder]:
        labels = self.actors
        return [s.tree.to_vsp(labels) for s in self.samples]

    def acceptance_rates(self) -> dict:
        return {k: (a / n if n else float("nan")) for k, (a, n) in self.acceptance.items()}


def _record(state: ChainState, it: int) -> Sample:
    m = Mdt.from_key(state.tree.key())
    return Sample(it, m, state.q, state.p, state.phi, state.log_prior, state.log_lik, tuple(float(v) for v in state.per_list))


def initial_state(data: RankDataset, config: McmcConfig, spec: HyperPriorSpec, rng) -> ChainState:
    actors = data.actor_ids
    post = Posterior(data.orderings, actors, config.model, spec, config.parameterization, config.cache_size)
    h = sample_hyper(spec, rng)
    q = float(config.init.get("q", h.q))
    p = float(config.init.get("p", h.p))
    phi = post.fixed_phi()
    if phi is None:
        phi = float(config.init.get("phi", h.phi))
    tree = sample_bdt_prior(len(actors), q, rng, actors)
    if config.parameterization == "mdt":
        tree = bdt_collapse_to_mdt(tree)
    return ChainState.create(tree, q, p, phi, post)


def make_header(data: RankDataset, config: McmcConfig, spec: HyperPriorSpec, seed) -> dict:
    return {
        "format_version": TRACE_FORMAT_VERSION,
        "seed": seed,
        "model": config.model,
        "parameterization": config.parameterization,
        "config": config.to_dict(),
        "hyperprior": spec.to_dict(),
        "actors": [{"id": a.id, "name": a.name, "group": a.group} for a in data.actors],
        "n_lists": len(data.lists),
        "data_hash": dataset_hash(data),
    }


def run_chain(data: RankDataset, config: McmcConfig, priors: HyperPriorSpec | None = None, rng=None, writer=None, state: ChainState | None = None) -> ChainTrace:
    """Run one chain; records every ``thin``-th sweep after ``burn_in`` sweeps.

    ``writer`` (optional) receives each sample as it is recorded. On
    KeyboardInterrupt the samples so far are returned inside InterruptedRun.
    """
    spec = priors if priors is not None else HyperPriorSpec()
    seed = config.seed
    if rng is None:
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2**63))
        rng = np.random.default_rng(seed)
    header = make_header(data, config, spec, seed)
    if writer is not None:
        writer.write_header(header)
    if state is None:
        state = initial_state(data, config, spec, rng)
    samples = []
    try:
        for it in range(1, config.iterations + 1):
            sweep(state, config, rng)
            if config.check_every and it % config.check_every == 0:
                check_state(state)
            if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
                s = _record(state, it)
                samples.append(s)
                if writer is not None:
                    writer.write_sample(s)
    except KeyboardInterrupt:
        trace = ChainTrace(header, samples, {k: list(v) for k, v in state.counts.items()})
        raise InterruptedRun(f"interrupted after {len(samples)} samples", trace) from None
    trace = ChainTrace(header, samples, {k: list(v) for k, v in state.counts.items()})
    if writer is not None:
        writer.write_footer(trace.acceptance)
    return trace


def exact_posterior(data, q: float, p: float, phi: float = 1.0, model: str = "qju", actors: Sequence | None = None) -> dict:
    """Posterior over every VSP on the ground set, by enumeration (n <= 4)."""
    if isinstance(data, RankDataset):
        lists, ground = data.orderings, data.actor_ids
    else:
        lists = [tuple(x) for x in data]
        ground = sorted({a for x in lists for a in x})
    if actors is not None:
        ground = list(actors)
    if len(ground) > EXACT_POSTERIOR_BOUND:
        raise OracleBoundExceeded(f"n={len(ground)} exceeds exact posterior bound {EXACT_POSTERIOR_BOUND}")
    model = normalize_model(model)
    vsps = enumerate_vsps(len(ground), sorted(ground))
    logs = []
    for v in vsps:
        m = vsp_to_mdt(v)
        ll, _ = ListEvaluator(m).dataset(lists, model, p, phi)
        logs.append(vsp_log_prior(m, q) + ll)
    logs = np.array(logs)
    w = np.exp(logs - logsumexp(logs))
    return dict(zip(vsps, w.tolist()))


def effective_sample_size(x) -> float:
    """Autocorrelation-based ESS with Geyer's initial monotone sequence."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    xc = x - x.mean()
    if not np.any(xc):
        return float(n)
    f = np.fft.rfft(xc, 2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n]
    rho = acov / acov[0]
    tau = -1.0
    prev = math.inf
    for k in range(n // 2):
        g = rho[2 * k] + rho[2 * k + 1]
        if g <= 0:
            break
        g = min(g, prev)
        prev = g
        tau += 2.0 * g
    return float(n / max(tau, 1e-12))
