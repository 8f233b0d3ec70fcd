"""Retrieval evaluation: precision-recall curve, mAP, nearest neighbor,
first/second tier, E-measure at 32, and normalized DCG.

Relevance is binary and derived purely from class labels. Queries whose
gallery holds no relevant item are excluded from every mean and counted in
the report instead of being scored zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .retrieval import RankedList

PR_GRID = np.round(np.arange(1, 21) * 0.05, 2)  # recall 0.05 .. 1.00
E_MEASURE_CUTOFF = 32


class UnevaluableError(ValueError):
    """No query had at least one relevant gallery item."""


@dataclass
class RelevanceJudgedList:
    query_id: str
    query_class: str
    rel: np.ndarray  # 0/1 per hit, in rank order, over the whole gallery
    relevant_total: int  # relevant items in the gallery (R)

    @property
    def gallery_size(self) -> int:
        return int(self.rel.size)


def judge(ranked: RankedList, classes: dict[str, str], query_class: str) -> RelevanceJudgedList:
    """Mark each hit relevant iff its class matches the query's."""
    rel = np.array([1 if classes[tid] == query_class else 0 for tid, _ in ranked.hits],
                   dtype=np.int64)
    return RelevanceJudgedList(
        query_id=ranked.query_id,
        query_class=query_class,
        rel=rel,
        relevant_total=int(rel.sum()),
    )


def average_precision(jl: RelevanceJudgedList) -> float:
    """Mean of precision@k over the ranks k of relevant hits, divided by R."""
    if jl.relevant_total < 1:
        raise ValueError("average precision undefined for a query with no relevant items")
    ranks = np.flatnonzero(jl.rel) + 1
    precisions = np.arange(1, ranks.size + 1) / ranks
    return float(precisions.sum() / jl.relevant_total)


def nearest_neighbor(jl: RelevanceJudgedList) -> int:
    if jl.gallery_size == 0:
        raise ValueError("empty ranking")
    return int(jl.rel[0])


def tiers(jl: RelevanceJudgedList) -> tuple[float, float]:
    """(first tier, second tier): recall within the top R and top 2R ranks."""
    r = jl.relevant_total
    if r < 1:
        raise ValueError("tiers undefined for a query with no relevant items")
    ft = float(jl.rel[:r].sum() / r)
    st = min(1.0, float(jl.rel[: 2 * r].sum() / r))
    return ft, st


def e_measure(jl: RelevanceJudgedList) -> float:
    """Harmonic mean of precision and recall over the top 32 hits."""
    if jl.gallery_size == 0:
        raise ValueError("empty ranking")
    top = int(jl.rel[:E_MEASURE_CUTOFF].sum())
    precision = top / min(E_MEASURE_CUTOFF, jl.gallery_size)
    recall = top / jl.relevant_total if jl.relevant_total else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def ndcg(jl: RelevanceJudgedList) -> float:
    """Cumulated gain with 1/log2(rank) discount (rank 1 undiscounted),
    normalized by the ideal ordering."""
    if jl.relevant_total < 1:
        raise ValueError("DCG undefined for a query with no relevant items")
    ideal = np.zeros_like(jl.rel)
    ideal[: jl.relevant_total] = 1
    return _dcg(jl.rel) / _dcg(ideal)


def _dcg(rel: np.ndarray) -> float:
    gains = rel.astype(np.float64).copy()
    if rel.size > 1:
        gains[1:] /= np.log2(np.arange(2, rel.size + 1))
    return float(gains.sum())


def interpolated_pr(jl: RelevanceJudgedList) -> np.ndarray:
    """Precision at the 20 fixed recall rates for one query.

    The precision values at the relevant-hit recall points are first replaced
    by their running maximum from the right (so precision never rises as
    recall grows), then linearly interpolated onto the grid; below the first
    recall point the first value extends, beyond the last the last value does.
    """
    if jl.relevant_total < 1:
        raise ValueError("PR curve undefined for a query with no relevant items")
    ranks = np.flatnonzero(jl.rel) + 1
    precision = np.arange(1, ranks.size + 1) / ranks
    recall = np.arange(1, ranks.size + 1) / jl.relevant_total
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    return np.interp(PR_GRID, recall, envelope)


@dataclass
class MetricsReport:
    nn: float
    ft: float
    st: float
    e: float
    dcg: float
    map: float
    pr_curve: list[float]
    evaluated: int = 0
    skipped: int = 0

    def as_dict(self) -> dict:
        return {
            "NN": self.nn,
            "FT": self.ft,
            "ST": self.st,
            "E": self.e,
            "DCG": self.dcg,
            "mAP": self.map,
            "PR": self.pr_curve,
            "queries": self.evaluated,
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    def table(self) -> str:
        headers = ["NN", "FT", "ST", "E", "DCG", "mAP"]
        values = [self.nn, self.ft, self.st, self.e, self.dcg, self.map]
        cells = [f"{v:.3f}" for v in values]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = " | ".join(h.rjust(w) for h, w in zip(headers, widths))
        rule = "-+-".join("-" * w for w in widths)
        row = " | ".join(c.rjust(w) for c, w in zip(cells, widths))
        return f"{head}\n{rule}\n{row}"


def evaluate_all(judged: list[RelevanceJudgedList]) -> MetricsReport:
    """Mean of each per-query metric over the evaluable queries."""
    evaluable = [jl for jl in judged if jl.relevant_total >= 1 and jl.gallery_size >= 1]
    skipped = len(judged) - len(evaluable)
    if not evaluable:
        raise UnevaluableError("no evaluable queries (every query had zero relevant items)")
    nn = float(np.mean([nearest_neighbor(jl) for jl in evaluable]))
    ft_st = [tiers(jl) for jl in evaluable]
    ft = float(np.mean([t[0] for t in ft_st]))
    st = float(np.mean([t[1] for t in ft_st]))
    e = float(np.mean([e_measure(jl) for jl in evaluable]))
    dcg = float(np.mean([ndcg(jl) for jl in evaluable]))
    mean_ap = float(np.mean([average_precision(jl) for jl in evaluable]))
    pr = np.mean([interpolated_pr(jl) for jl in evaluable], axis=0)
    return MetricsReport(
        nn=nn, ft=ft, st=st, e=e, dcg=dcg, map=mean_ap,
        pr_curve=[float(v) for v in pr],
        evaluated=len(evaluable), skipped=skipped,
    )
