"""Canonical forms and semantic hashing via equality saturation.

``canonicalize`` inserts an expression into a fresh e-graph, saturates the
rewrite rules, extracts the cost-minimal representative, renumbers parameter
leaves left to right, and hashes the rendered text.  Two expressions have the
same semantic hash exactly when this pipeline maps them to the same canonical
form, which treats reparameterisations (for example ``p1*(x+p2)`` against
``p1*x + p2``) as the same function family.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .expr import Expr, PARAM, CONST, HOLE
from .egraph import EGraph, EqSatConfig, RULES
from .normalize import normalize

__all__ = [
    "CanonicalForm", "canonicalize", "simplifies_to_constant",
    "semantic_hash", "Canonicalizer", "EqSatConfig",
]


@dataclass(frozen=True)
class CanonicalForm:
    expression: Expr
    semantic_hash: int
    n_params: int
    n_nodes: int

    @property
    def text(self) -> str:
        return ex.render(self.expression)


def _renumber_leaves(e: Expr) -> Expr:
    """Renumber parameter and hole leaves 1..k in left-to-right order."""
    pmap: dict[int, int] = {}
    hmap: dict[int, int] = {}

    def walk(node: Expr) -> Expr:
        if node.kind == PARAM:
            idx = pmap.setdefault(node.value, len(pmap) + 1)
            return node if idx == node.value else ex.param(idx)
        if node.kind == HOLE:
            idx = hmap.setdefault(node.value, len(hmap) + 1)
            return node if idx == node.value else ex.hole(idx)
        if not node.children:
            return node
        kids = tuple(walk(c) for c in node.children)
        if all(k is c for k, c in zip(kids, node.children)):
            return node
        return Expr(node.kind, node.value, kids)

    return walk(e)


def canonicalize(e: Expr, config: EqSatConfig = EqSatConfig()) -> CanonicalForm:
    """Canonical representative of all expressions congruent to ``e``.

    The expression is first brought to algebraic normal form (collapsing
    commutative orderings, sign variants, reciprocal/power chains and
    parameter-only subexpressions), then saturated in an e-graph under the
    configured budget, and the cost-minimal member is extracted.
    """
    n = normalize(e)
    g = EGraph(node_budget=config.node_budget)
    root = g.add_expr(n)
    if n != e:
        # the raw tree anchors extraction: the canonical form can never cost
        # more than the input even when one-way rules cannot rebuild it
        g._union(root, g.add_expr(e))
    g.rebuild()
    g.saturate(RULES, max_iters=config.max_iters,
               node_budget=config.node_budget)
    extracted = g.extract(g.find(root))
    canon = _renumber_leaves(extracted)
    text = ex.render(canon)
    n_params = sum(1 for n2 in ex.subtrees(canon) if n2.kind == PARAM)
    return CanonicalForm(canon, ex.text_hash(text), n_params,
                         ex.count_nodes(canon))


def semantic_hash(e: Expr, config: EqSatConfig = EqSatConfig()) -> int:
    return canonicalize(e, config).semantic_hash


def simplifies_to_constant(e: Expr, config: EqSatConfig = EqSatConfig()) -> bool:
    """True when the canonical form is a lone parameter or literal."""
    kind = canonicalize(e, config).expression.kind
    return kind in (PARAM, CONST)


class Canonicalizer:
    """Caching front-end for canonicalize; safe because Expr is immutable.

    Lookups happen twice: on the raw tree and on its normal form, so every
    tree in one commutative/sign orbit shares a single e-graph run.  GP runs
    revisit structures heavily and enumeration pours whole orbits through
    the same entries, so both workloads hit the cache hard.
    """

    def __init__(self, config: EqSatConfig = EqSatConfig()):
        self.config = config
        self._cache: dict[Expr, CanonicalForm] = {}
        self.hits = 0
        self.misses = 0

    def __call__(self, e: Expr) -> CanonicalForm:
        got = self._cache.get(e)
        if got is not None:
            self.hits += 1
            return got
        n = normalize(e)
        cf = self._cache.get(n)
        if cf is None:
            self.misses += 1
            cf = canonicalize(e, self.config)
            self._cache[n] = cf
        else:
            self.hits += 1
        self._cache[e] = cf
        return cf

    def simplifies_to_constant(self, e: Expr) -> bool:
        kind = self(e).expression.kind
        return kind in (PARAM, CONST)
