"""Generational tree GP for symbolic regression with parameter fitting.

The loop, per generation: select two parents by tournament, cross over with
probability p_cx (otherwise keep the first parent), then subtree-mutate; the
new population fully replaces the old one, after which the worst individual
is swapped for the best of all time (elitism).  Every candidate is fitted
with a short single-restart quasi-Newton run as part of evaluation; an
offspring over the length limit is assigned an infinite sentinel fitness and
no fitting effort.  Every evaluation is appended to the run log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from . import expr as ex
from .expr import Expr
from .dataset import Dataset
from .egraph import EqSatConfig
from .fitting import FitConfig, GP_FIT, fit
from .runlog import LogRecord, RunLog
from .simplify import Canonicalizer

__all__ = ["GpConfig", "Individual", "run_gp", "init_population",
           "tournament_select", "crossover", "mutate", "grow", "full",
           "gp_preset", "GpInitError"]

_FUNCTIONS = (ex.INV, ex.POWABS, ex.ADD, ex.SUB, ex.MUL, ex.DIV)


class GpInitError(RuntimeError):
    """Population initialization failed to find finite-fitness individuals."""


@dataclass(frozen=True)
class GpConfig:
    pop_size: int = 100
    generations: int = 250
    min_depth: int = 2
    max_depth: int = 4
    tournament_size: int = 2
    p_cx: float = 1.0
    p_mut: float = 0.25
    max_len: int = 10
    objective: str = "mse"
    fit_config: FitConfig = GP_FIT
    eqsat: EqSatConfig = EqSatConfig()
    init_resample_cap: int = 10_000

    def as_dict(self) -> dict:
        return {
            "pop_size": self.pop_size, "generations": self.generations,
            "min_depth": self.min_depth, "max_depth": self.max_depth,
            "tournament_size": self.tournament_size, "cx_prob": self.p_cx,
            "mut_prob": self.p_mut, "max_length": self.max_len,
            "objective": self.objective,
            "optim_iterations": self.fit_config.max_iters,
        }


def gp_preset(max_len: int) -> GpConfig:
    """Hyperparameter presets: length 10/12 use pop 100 and tournament 2,
    length 20 uses pop 500 and tournament 4."""
    if max_len >= 20:
        return GpConfig(pop_size=500, tournament_size=4, max_len=max_len)
    return GpConfig(max_len=max_len)


@dataclass(frozen=True)
class Individual:
    expr: Expr
    theta: tuple
    fitness: float
    eval_id: int


def _depth(e: Expr) -> int:
    if not e.children:
        return 1
    return 1 + max(_depth(c) for c in e.children)


def _terminal(rng) -> Expr:
    return ex.var(1) if rng.random() < 0.5 else ex.param(1)


def _function_node(rng, gen_child) -> Expr:
    op = _FUNCTIONS[rng.integers(0, len(_FUNCTIONS))]
    arity = ex.ARITY[op]
    return Expr(op, None, tuple(gen_child() for _ in range(arity)))


def grow(rng, max_depth: int, min_depth: int = 1) -> Expr:
    """Grow method: below min_depth force functions, at max_depth force
    terminals, in between choose a function with probability 0.5."""

    def gen(depth: int) -> Expr:
        if depth >= max_depth:
            return _terminal(rng)
        if depth < min_depth or rng.random() < 0.5:
            return _function_node(rng, lambda: gen(depth + 1))
        return _terminal(rng)

    return gen(1)


def full(rng, max_depth: int) -> Expr:
    """Full method: functions at every level above max_depth."""

    def gen(depth: int) -> Expr:
        if depth >= max_depth:
            return _terminal(rng)
        return _function_node(rng, lambda: gen(depth + 1))

    return gen(1)


def tournament_select(pop: list, k: int, rng) -> Individual:
    """Sample k uniformly with replacement; fittest wins, ties at the best
    fitness are broken uniformly at random."""
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    idx = rng.integers(0, len(pop), k)
    best = None
    tied = []
    for i in idx:
        f = pop[i].fitness
        if best is None or f < best:
            best = f
            tied = [i]
        elif f == best:
            tied.append(i)
    choice = tied[0] if len(tied) == 1 else tied[rng.integers(0, len(tied))]
    return pop[choice]


def _replace_node(e: Expr, target: int, repl: Expr) -> Expr:
    """Replace the pre-order node number ``target`` (0-based) with ``repl``."""
    counter = [-1]

    def walk(node: Expr) -> Expr:
        counter[0] += 1
        if counter[0] == target:
            return repl
        if not node.children:
            return node
        return Expr(node.kind, node.value,
                    tuple(walk(c) for c in node.children))

    return walk(e)


def _pick_subtree(e: Expr, index: int) -> Expr:
    for i, node in enumerate(ex.subtrees(e)):
        if i == index:
            return node
    raise IndexError(index)


def crossover(parent1: Expr, parent2: Expr, p_cx: float, rng) -> Expr:
    """Replace a uniformly chosen node of parent1 with a uniformly chosen
    subtree of parent2; with probability 1 - p_cx return parent1 unchanged."""
    if rng.random() >= p_cx:
        return parent1
    n1 = ex.count_nodes(parent1)
    n2 = ex.count_nodes(parent2)
    target = int(rng.integers(0, n1))
    donor = _pick_subtree(parent2, int(rng.integers(0, n2)))
    return _replace_node(parent1, target, donor)


def mutate(e: Expr, p_mut: float, rng) -> Expr:
    """Pre-order Bernoulli(p_mut) per node; the first success is replaced by
    a grow(depth <= 2) subtree; no success leaves the tree unchanged."""
    nodes = ex.count_nodes(e)
    for i in range(nodes):
        if rng.random() < p_mut:
            return _replace_node(e, i, grow(rng, max_depth=2))
    return e


class _Run:
    """Mutable state of one GP run."""

    def __init__(self, cfg: GpConfig, data: Dataset, seed: int):
        self.cfg = cfg
        self.data = data
        self.rng = np.random.default_rng(seed)
        self.canon = Canonicalizer(cfg.eqsat)
        self.records: list = []
        self.eval_id = 0
        self.fevals = 0
        self.init_discards = 0

    def evaluate(self, tree: Expr, gen: int) -> Individual:
        tree = ex.renumber_params(tree)
        self.eval_id += 1
        if ex.length(tree) > self.cfg.max_len:
            ind = Individual(tree, (), math.inf, self.eval_id)
            self.records.append(LogRecord(
                gen, self.eval_id, ex.structural_hash(tree), 0, math.inf,
                ex.render(tree), self.fevals))
            return ind
        seed = int(self.rng.integers(0, 2**63 - 1))
        res = fit(tree, self.data, self.cfg.objective, self.cfg.fit_config,
                  seed)
        self.fevals += res.n_obj_evals
        fitness = res.objective if math.isfinite(res.objective) else math.inf
        cf = self.canon(tree)
        self.records.append(LogRecord(
            gen, self.eval_id, ex.structural_hash(tree), cf.semantic_hash,
            fitness, ex.render(tree), self.fevals, res.params))
        return Individual(tree, res.params, fitness, self.eval_id)


def init_population(cfg: GpConfig, run: _Run) -> list:
    """Ramped half-and-half: cycle (depth, grow/full) combinations over
    depths 3..max_depth; resample every individual until its fitness is
    finite (and within the length limit)."""
    combos = [(d, m) for d in range(min(3, cfg.max_depth), cfg.max_depth + 1)
              for m in ("grow", "full")]
    pop = []
    for i in range(cfg.pop_size):
        depth, method = combos[i % len(combos)]
        attempts = 0
        while True:
            attempts += 1
            if attempts > cfg.init_resample_cap:
                raise GpInitError(
                    f"no finite-fitness individual after "
                    f"{cfg.init_resample_cap} samples")
            if method == "grow":
                tree = grow(run.rng, depth, cfg.min_depth)
            else:
                tree = full(run.rng, depth)
            ind = run.evaluate(tree, 0)
            if math.isfinite(ind.fitness):
                pop.append(ind)
                break
            run.init_discards += 1
    return pop


def run_gp(cfg: GpConfig, data: Dataset, seed: int = 0) -> RunLog:
    """One full GP run; deterministic given the seed."""
    run = _Run(cfg, data, seed)
    pop = init_population(cfg, run)
    best_ever = min(pop, key=lambda i: i.fitness)
    for gen in range(1, cfg.generations + 1):
        newpop = []
        for _ in range(cfg.pop_size):
            p1 = tournament_select(pop, cfg.tournament_size, run.rng)
            p2 = tournament_select(pop, cfg.tournament_size, run.rng)
            child = crossover(p1.expr, p2.expr, cfg.p_cx, run.rng)
            child = mutate(child, cfg.p_mut, run.rng)
            newpop.append(run.evaluate(child, gen))
        pop = newpop
        gen_best = min(pop, key=lambda i: i.fitness)
        if gen_best.fitness < best_ever.fitness:
            best_ever = gen_best
        elif all(i.eval_id != best_ever.eval_id for i in pop):
            worst = max(range(len(pop)), key=lambda j: pop[j].fitness)
            pop[worst] = best_ever
    config = cfg.as_dict()
    config["init_discards"] = run.init_discards
    return RunLog(run.records, config, seed)
