"""Seeded replications of the hierarchy and the two baselines."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import graphs
from .environment import (
    GroupedEnvironment,
    instant_pseudo_regret,
    next_context,
    one_best_arm_means,
    parse_generator,
    pull,
)
from .hierarchy import build, choose_D, count_bad, feedback, serve
from .tsallis import ArmOutcome, new_state, sample_arm, update

log = logging.getLogger(__name__)

ALGOS = ("hier", "global", "pervertex")

# stream labels for SeedSequence spawn keys; fixed so that changing one
# component never perturbs another component's randomness
STREAM_ENV = 1
STREAM_CONTEXTS = 2
STREAM_TREE = 3
STREAM_LEARNER = 4
STREAM_INSTANCE = 5


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


def stream(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(label,)))


@dataclass
class ExperimentConfig:
    """One experiment: a graph, a labeling, group means, a horizon and a list of seeds.

    Without explicit ``group_means`` each label gets one best arm at
    ``center + gap/2`` and all other arms at ``center - gap/2``.
    ``f_est=None`` falls back to the true cutsize of the reduced line.

    ``graph`` is either a LabeledGraph or a source string: a file path,
    ``line:N``, ``tree:N`` or ``gnp:N,P``. ``labels`` is ``None`` (use the
    graph's own), ``blocks:f`` or a path to ``vertex label`` lines.
    """

    graph: object
    K: int
    T: int
    labels: Optional[str] = None
    f_est: Optional[int] = None
    D: Optional[int] = None
    mode: str = "general"
    gen: str = "iid"
    seeds: Sequence[int] = (0,)
    algo: str = "hier"
    group_means: Optional[Dict[int, List[float]]] = None
    gap: float = 0.3
    center: float = 0.5
    tree_per: str = "seed"  # "seed" or "experiment"
    instance_seed: int = 0

    def validate(self) -> None:
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if not list(self.seeds):
            raise ConfigError("need at least one seed")
        if self.f_est is not None and self.f_est < 0:
            raise ConfigError("f estimate must be >= 0")
        if self.D is not None and self.D < 1:
            raise ConfigError("D must be >= 1")
        if self.mode not in ("general", "easy"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.tree_per not in ("seed", "experiment"):
            raise ConfigError(f"tree_per must be 'seed' or 'experiment', got {self.tree_per!r}")
        if not (0.0 <= self.center - self.gap / 2 and self.center + self.gap / 2 <= 1.0):
            raise ConfigError("center +- gap/2 must stay inside [0, 1]")
        if self.group_means is not None:
            sizes = {len(mu) for mu in self.group_means.values()}
            if sizes != {self.K}:
                raise ConfigError(f"group means have {sorted(sizes)} arms but K={self.K}")


@dataclass
class RegretTrace:
    seed: int
    algo: str
    T: int
    K: int
    slot: np.ndarray
    arm: np.ndarray
    reward: np.ndarray
    inst_regret: np.ndarray
    cum_regret: np.ndarray
    D: Optional[int] = None
    f_true: int = 0
    f_est: Optional[int] = None
    nodes_activated: int = 0
    bad_nodes: int = 0
    graph_cutsize: int = 0
    observable_cutsize: int = 0
    handled_total: int = 0
    n_padded: int = 0

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.slot) + 1)

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1]) if len(self.cum_regret) else 0.0

    def summary_row(self) -> dict:
        return {
            "seed": self.seed, "T": self.T, "K": self.K, "f_true": self.f_true,
            "f_est": "" if self.f_est is None else self.f_est,
            "D": "" if self.D is None else self.D, "algo": self.algo,
            "final_regret": self.final_regret, "nodes_activated": self.nodes_activated,
            "bad_nodes": self.bad_nodes,
        }


@dataclass
class Instance:
    """The graph-derived pieces a single replication needs."""

    graph: graphs.LabeledGraph
    path: graphs.PathInstance
    env: GroupedEnvironment
    f_graph: int
    f_path: int
    meta: dict = field(default_factory=dict)


def _base_graph(cfg: ExperimentConfig) -> graphs.LabeledGraph:
    src = cfg.graph
    if isinstance(src, graphs.LabeledGraph):
        return src
    src = str(src)
    kind, _, arg = src.partition(":")
    rng = stream(cfg.instance_seed, STREAM_INSTANCE)
    try:
        if kind == "line":
            return graphs.line_graph(int(arg))
        if kind == "tree":
            return graphs.random_tree(int(arg), rng)
        if kind == "gnp":
            n, p = arg.split(",")
            return graphs.gnp_connected(int(n), float(p), rng)
    except (ValueError, graphs.GraphError) as exc:
        raise ConfigError(f"bad graph source {src!r}: {exc}") from exc
    path = Path(src)
    if not path.exists():
        raise ConfigError(f"graph source {src!r} is neither a file nor line:/tree:/gnp:")
    try:
        return graphs.read_graph(path)
    except graphs.GraphError as exc:
        raise ConfigError(str(exc)) from exc


def _apply_labels(g: graphs.LabeledGraph, spec: Optional[str]) -> graphs.LabeledGraph:
    if spec is None:
        if g.labels is None:
            raise ConfigError("unlabeled graph")
        return g
    if spec.startswith("blocks:"):
        try:
            return graphs.with_labels(g, graphs.block_labels(g.n, int(spec.split(":", 1)[1])))
        except (ValueError, graphs.GraphError) as exc:
            raise ConfigError(str(exc)) from exc
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"label source {spec!r} is neither blocks:f nor a file")
    labels = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            v, y = line.split()
            labels[int(v)] = int(y)
    try:
        return graphs.LabeledGraph(g.n, list(g.edges), labels)
    except graphs.GraphError as exc:
        raise ConfigError(str(exc)) from exc


def prepare(cfg: ExperimentConfig) -> graphs.LabeledGraph:
    """Validate the config and resolve the labeled input graph."""
    cfg.validate()
    g = _apply_labels(_base_graph(cfg), cfg.labels)
    if not g.is_connected():
        raise ConfigError("graph is not connected")
    if cfg.group_means is not None:
        missing = set(g.labels.values()) - set(cfg.group_means)
        if missing:
            raise ConfigError(f"labels {sorted(missing)} have no group means")
    return g


def make_instance(cfg: ExperimentConfig, g: graphs.LabeledGraph, seed: int) -> Instance:
    if g.is_line():
        path = graphs.line_instance(g)
        tree = g
    elif g.is_tree():
        tree = g
        path = graphs.euler_spine(g)
    else:
        tree_seed = seed if cfg.tree_per == "seed" else cfg.instance_seed
        tree = graphs.wilson_ust(g, stream(tree_seed, STREAM_TREE))
        path = graphs.euler_spine(tree)
    means = cfg.group_means
    if means is None:
        means = one_best_arm_means(g.num_labels, cfg.K, cfg.center + cfg.gap / 2, cfg.gap)
    env = GroupedEnvironment(g.labels, means)
    return Instance(g, path, env, graphs.cutsize(g), graphs.cutsize(path.as_graph()) if path.length else 0,
                    {"tree_cutsize": graphs.cutsize(tree)})


def _new_trace(T: int) -> dict:
    return {"slot": np.zeros(T, dtype=np.int64), "arm": np.zeros(T, dtype=np.int64),
            "reward": np.zeros(T, dtype=np.int64), "inst": np.zeros(T, dtype=np.float64)}


def _finish(cfg: ExperimentConfig, seed: int, algo: str, inst: Instance, buf: dict, cum: List[float],
            **extra) -> RegretTrace:
    observed_positions = {inst.path.origin_map[int(v)] for v in np.unique(buf["slot"])}
    obs_cut = 0
    if inst.path.length >= 1:
        obs_cut = graphs.observable_cutsize(inst.path.as_graph(), observed_positions)
    return RegretTrace(
        seed=seed, algo=algo, T=cfg.T, K=cfg.K, slot=buf["slot"], arm=buf["arm"],
        reward=buf["reward"], inst_regret=buf["inst"], cum_regret=np.asarray(cum, dtype=np.float64),
        f_true=inst.f_path, f_est=cfg.f_est, graph_cutsize=inst.f_graph,
        observable_cutsize=obs_cut, **extra,
    )


def _rounds(cfg, inst, seed, choose, learn):
    """Shared per-round loop. ``choose(v, rng)`` returns (arm, token); ``learn(token, arm, loss)``."""
    gen = parse_generator(cfg.gen, inst.graph.n)
    ctx_rng = stream(seed, STREAM_CONTEXTS)
    env_rng = stream(seed, STREAM_ENV)
    learn_rng = stream(seed, STREAM_LEARNER)
    buf = _new_trace(cfg.T)
    slot, arm_col, reward_col, inst_col = buf["slot"], buf["arm"], buf["reward"], buf["inst"]
    env = inst.env
    cum = []
    total = 0.0
    for t in range(cfg.T):
        v = next_context(gen, ctx_rng)
        arm, token = choose(v, learn_rng)
        reward = pull(env, v, arm, env_rng)
        learn(token, arm, 1.0 - reward)
        r = instant_pseudo_regret(env, v, arm)
        total += r
        slot[t] = v
        arm_col[t] = arm
        reward_col[t] = reward
        inst_col[t] = r
        cum.append(total)
    return buf, cum


def run_one(cfg: ExperimentConfig, seed: int, g: Optional[graphs.LabeledGraph] = None) -> RegretTrace:
    """One replication of ``cfg.algo`` under master seed ``seed``."""
    if g is None:
        g = prepare(cfg)
    inst = make_instance(cfg, g, seed)
    if cfg.algo == "hier":
        return _run_hier(cfg, inst, seed)
    if cfg.algo == "global":
        return _run_global(cfg, inst, seed)
    return _run_pervertex(cfg, inst, seed)


def _run_hier(cfg: ExperimentConfig, inst: Instance, seed: int) -> RegretTrace:
    n_slots = max(inst.path.length, 2)
    f_est = inst.f_path if cfg.f_est is None else cfg.f_est
    D = cfg.D if cfg.D is not None else choose_D(cfg.T, cfg.K, f_est, n_slots, cfg.mode)
    sched = build(n_slots, cfg.K, D)
    origin = inst.path.origin_map

    def choose(v, rng):
        return serve(sched, origin[v], rng)

    def learn(node, arm, loss):
        feedback(sched, node, arm, loss)

    buf, cum = _rounds(cfg, inst, seed, choose, learn)
    labels = [inst.path.position_label[p] for p in range(1, inst.path.length + 1)]
    return _finish(cfg, seed, "hier", inst, buf, cum, D=D, nodes_activated=sched.activations,
                   bad_nodes=count_bad(sched, labels),
                   handled_total=sum(v.handled for v in sched.nodes), n_padded=sched.n_padded)


def _run_global(cfg: ExperimentConfig, inst: Instance, seed: int) -> RegretTrace:
    state = new_state(cfg.K)

    def choose(v, rng):
        return sample_arm(state, rng), state

    def learn(s, arm, loss):
        update(s, ArmOutcome(arm, loss))

    buf, cum = _rounds(cfg, inst, seed, choose, learn)
    return _finish(cfg, seed, "global", inst, buf, cum, nodes_activated=1,
                   bad_nodes=int(inst.f_graph > 0), handled_total=cfg.T)


def _run_pervertex(cfg: ExperimentConfig, inst: Instance, seed: int) -> RegretTrace:
    states: Dict[int, object] = {}

    def choose(v, rng):
        s = states.get(v)
        if s is None:
            s = states[v] = new_state(cfg.K)
        return sample_arm(s, rng), s

    def learn(s, arm, loss):
        update(s, ArmOutcome(arm, loss))

    buf, cum = _rounds(cfg, inst, seed, choose, learn)
    return _finish(cfg, seed, "pervertex", inst, buf, cum, nodes_activated=len(states),
                   bad_nodes=0, handled_total=cfg.T)


def check_invariants(trace: RegretTrace) -> None:
    """Raise InvariantViolation if a finished run breaks an accounting or structural bound."""
    cum = trace.cum_regret
    if len(cum) != trace.T:
        raise InvariantViolation(f"trace has {len(cum)} rows, expected T={trace.T}")
    if len(cum) and np.any(np.diff(cum) < 0):
        raise InvariantViolation("cumulative regret decreased")
    if np.any(trace.inst_regret < 0):
        raise InvariantViolation("negative instantaneous regret")
    if trace.handled_total != trace.T:
        raise InvariantViolation(f"rounds handled {trace.handled_total} != T={trace.T}")
    if trace.algo == "hier":
        L = int(math.log2(trace.n_padded))
        if trace.bad_nodes > trace.f_true * L:
            raise InvariantViolation(f"bad nodes {trace.bad_nodes} > f*L = {trace.f_true * L}")
        bound = 2 + 2 * math.ceil(trace.T / trace.D)
        if trace.nodes_activated > bound:
            raise InvariantViolation(f"activated {trace.nodes_activated} > {bound}")


def run(cfg: ExperimentConfig, workers: int = 1) -> List[RegretTrace]:
    """All replications of ``cfg``, sorted by seed."""
    g = prepare(cfg)
    seeds = sorted(set(int(s) for s in cfg.seeds))
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_one, [cfg] * len(seeds), seeds, [g] * len(seeds)))
    else:
        traces = [run_one(cfg, s, g) for s in seeds]
    for tr in traces:
        check_invariants(tr)
    traces.sort(key=lambda tr: tr.seed)
    log.info("ran %d replications of %s, T=%d", len(traces), cfg.algo, cfg.T)
    return traces


def _with_algo(cfg: ExperimentConfig, algo: str) -> ExperimentConfig:
    return replace(cfg, algo=algo)


def run_baseline_global(cfg: ExperimentConfig, workers: int = 1) -> List[RegretTrace]:
    return run(_with_algo(cfg, "global"), workers)


def run_baseline_per_vertex(cfg: ExperimentConfig, workers: int = 1) -> List[RegretTrace]:
    return run(_with_algo(cfg, "pervertex"), workers)
