"""Idealized random search over an enumerated catalog.

Each run walks the catalog entries in an independent uniform permutation,
without replacement, so a full run always ends at the catalog-wide optimum.
Per-entry fit results depend only on (global seed, entry hash), never on the
permutation, so they are shared across runs; the visited-expression counter
advances once per entry while the cumulative function-evaluation counter
reflects the full multi-restart fitting effort.
"""

from __future__ import annotations

import math

import numpy as np

from . import expr as ex
from .dataset import Dataset
from .enumeration import Catalog
from .fitting import ESR_FIT, FitConfig, entry_seed, fit
from .runlog import LogRecord, RunLog

__all__ = ["run_rs", "fit_entries"]


def fit_entries(catalog: Catalog, data: Dataset, objective: str = "mse",
                config: FitConfig = ESR_FIT, seed: int = 0,
                progress=None) -> dict:
    """Fit each entry once; {hash: (fitness, n_obj_evals, params)}."""
    out = {}
    for i, entry in enumerate(catalog.entries):
        res = fit(ex.parse(entry.text), data, objective, config,
                  entry_seed(seed, entry.semantic_hash))
        fitness = res.objective if math.isfinite(res.objective) else math.inf
        out[entry.semantic_hash] = (fitness, res.n_obj_evals, res.params)
        if progress is not None and (i + 1) % 100 == 0:
            progress(i + 1, len(catalog.entries))
    return out


def run_rs(catalog: Catalog, data: Dataset, objective: str = "mse",
           config: FitConfig = ESR_FIT, runs: int = 1, seed: int = 0,
           results: dict | None = None, progress=None) -> list:
    """Random-search baseline; returns one RunLog per run.

    ``results`` may carry precomputed per-entry fits (the output of
    ``fit_entries`` or ``fitting.fit_catalog``); missing entries are fitted
    on demand with per-entry seeds derived from ``seed``.
    """
    if results is None:
        results = fit_entries(catalog, data, objective, config, seed,
                              progress)
    else:
        converted = {}
        for h, v in results.items():
            if isinstance(v, tuple):
                converted[h] = v
            else:  # FitResult
                fitness = v.objective if math.isfinite(v.objective) else math.inf
                converted[h] = (fitness, v.n_obj_evals, v.params)
        results = converted
    struct_hashes = {e.semantic_hash: ex.structural_hash(ex.parse(e.text))
                     for e in catalog.entries}
    logs = []
    n = len(catalog.entries)
    for r in range(runs):
        rng = np.random.default_rng([seed, r])
        order = rng.permutation(n)
        records = []
        fevals = 0
        for i, idx in enumerate(order):
            entry = catalog.entries[idx]
            h = entry.semantic_hash
            fitness, n_evals, params = results[h]
            fevals += n_evals
            records.append(LogRecord(0, i + 1, struct_hashes[h], h, fitness,
                                     entry.text, fevals, params))
        logs.append(RunLog(records, {
            "algorithm": "rs", "objective": objective, "run": str(r),
            "catalog_len": str(catalog.max_len), "entries": str(n),
        }, seed))
    return logs
