"""Time-slotted simulation loop and regret accounting.

Per slot: estimate the IRM/SNM split from past requests, let the
policy place under capacity C, serve the slot's requests, feed the
policy its observations, and score against a clairvoyant oracle that
knows the slot's true request counts.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .catalog import Catalog, Regime
from .errors import EmptyWindow, LengthMismatch
from .policy import (
    Placement,
    PolicyContext,
    exact_knapsack,
    make_policy,
)
from .popularity import AllocationEstimate, AllocationEstimator, PopularitySnapshot
from .workload import RequestTrace


@dataclass(frozen=True)
class SlotRecord:
    hit_ratio: float
    oracle_hit_ratio: float
    regret_increment: float


@dataclass(frozen=True)
class RunMetrics:
    per_slot: tuple  # SlotRecord per slot, t = 1..T
    cumulative_regret: np.ndarray
    summary: dict


def slot_step(placement: Placement, events: Sequence[int]) -> tuple:
    """Serve one slot's requests against a frozen cache.

    Returns (hits, total, per-file hit counts for cached files).
    """
    hits = 0
    per_file = Counter()
    cached = placement.cached
    for cid in events:
        if cid in cached:
            hits += 1
            per_file[cid] += 1
    return hits, len(events), per_file


def oracle_placement(
    events: Sequence[int], sizes: dict, capacity: float
) -> tuple:
    """Clairvoyant per-slot optimum: exact knapsack over true counts.

    Returns (placement, oracle hit ratio for this slot).
    """
    counts = Counter(events)
    ids = sorted(counts)
    values = [float(counts[cid]) for cid in ids]
    item_sizes = [sizes[cid] for cid in ids]
    placement = exact_knapsack(values, item_sizes, capacity, ids=ids)
    hits, total, _ = slot_step(placement, events)
    ratio = hits / total if total else 0.0
    return placement, ratio


def cumulative_regret(
    achieved: Sequence[float], oracle: Sequence[float]
) -> np.ndarray:
    """Prefix sums of the per-slot gaps max(0, oracle - achieved)."""
    if len(achieved) != len(oracle):
        raise LengthMismatch(
            f"achieved has {len(achieved)} slots, oracle {len(oracle)}"
        )
    gaps = np.maximum(0.0, np.asarray(oracle, float) - np.asarray(achieved, float))
    return np.cumsum(gaps)


def run_simulation(
    catalog: Catalog,
    trace: RequestTrace,
    policy_name: str,
    capacity: float,
    seed: int,
    exploration_beta: float = 2.0,
    alloc_window: int = 10,
    alloc_smoothing: float = 0.3,
    config_hash: str = "",
) -> RunMetrics:
    """Drive one policy over one trace and score it slot by slot.

    The policy places at the start of slot t from slots < t only;
    deterministic given (catalog, trace, policy, seed).
    """
    if trace.horizon < 1:
        raise ValueError("trace horizon must be >= 1")
    policy = make_policy(
        policy_name, catalog, capacity, exploration_beta=exploration_beta
    )
    rng = np.random.default_rng(seed)
    sizes = {it.id: it.size for it in catalog.items}
    regime_of = {it.id: it.regime for it in catalog.items}
    irm_ids = catalog.irm_ids

    estimator = AllocationEstimator(window=alloc_window, smoothing=alloc_smoothing)
    irm_counts = Counter()
    all_counts = Counter()
    total_irm = 0
    total_all = 0

    events_by_slot = trace.events_by_slot()
    records = []
    achieved = []
    oracle = []
    total_hits = 0

    for t in range(1, trace.horizon + 1):
        try:
            alloc = estimator.estimate()
        except EmptyWindow:
            alloc = AllocationEstimate.from_snm(0.5)

        irm_ranking = tuple(
            sorted(
                ((cid, irm_counts.get(cid, 0) / total_irm if total_irm else 0.0)
                 for cid in irm_ids),
                key=lambda pair: (-pair[1], pair[0]),
            )
        )
        if total_all:
            history = PopularitySnapshot(
                slot=t - 1,
                freq={cid: c / total_all for cid, c in all_counts.items()},
            )
        else:
            history = PopularitySnapshot(slot=t - 1, freq={})

        ctx = PolicyContext(
            slot=t,
            alloc=alloc,
            snm_candidates=tuple(catalog.active_snm_ids(t)),
            irm_ranking=irm_ranking,
            history_popularity=history,
            rng=rng,
        )
        placement = policy.place(ctx)

        events = events_by_slot[t - 1]
        hits, total, _ = slot_step(placement, events)
        hit_ratio = hits / total if total else 0.0
        total_hits += hits

        policy.update(ctx, placement, events)

        _, oracle_ratio = oracle_placement(events, sizes, capacity)
        increment = max(0.0, oracle_ratio - hit_ratio)
        records.append(
            SlotRecord(
                hit_ratio=hit_ratio,
                oracle_hit_ratio=oracle_ratio,
                regret_increment=increment,
            )
        )
        achieved.append(hit_ratio)
        oracle.append(oracle_ratio)

        n_snm = sum(1 for cid in events if regime_of[cid] is Regime.SNM)
        estimator.observe(n_snm, len(events) - n_snm)
        for cid in events:
            all_counts[cid] += 1
            if regime_of[cid] is Regime.IRM:
                irm_counts[cid] += 1
        total_all += len(events)
        total_irm += sum(1 for cid in events if regime_of[cid] is Regime.IRM)

    regret = cumulative_regret(achieved, oracle)
    total_events = len(trace.events)
    summary = {
        "policy": policy_name,
        "seed": seed,
        "config_hash": config_hash,
        "mean_hit_ratio": total_hits / total_events if total_events else 0.0,
        "slot_mean_hit_ratio": float(np.mean(achieved)) if achieved else 0.0,
        "final_regret": float(regret[-1]) if len(regret) else 0.0,
    }
    return RunMetrics(
        per_slot=tuple(records), cumulative_regret=regret, summary=summary
    )
