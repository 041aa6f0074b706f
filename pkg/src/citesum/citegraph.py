"""Citation graph over a dataset and bounded breadth-first neighbourhoods."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import DanglingEdge, UnknownSeed


@dataclass(frozen=True)
class CitationGraph:
    nodes: tuple[str, ...]
    # citing uid -> cited uids, in citation-list order
    edges: dict[str, tuple[str, ...]]

    def __contains__(self, uid):
        return uid in self.edges

    @property
    def edge_count(self):
        return sum(len(v) for v in self.edges.values())


@dataclass(frozen=True)
class RetrievedSet:
    entries: tuple[tuple[str, int], ...]

    @property
    def uids(self):
        return [uid for uid, _ in self.entries]

    def to_jsonl_rows(self):
        return [{"uid": uid, "hop": hop} for uid, hop in self.entries]


def build_graph(ds) -> CitationGraph:
    """One node per record (auxiliary records included), one edge per citation."""
    edges = {}
    for rec in ds.all_records():
        edges[rec.uid] = tuple(dict.fromkeys(rec.citation_uids))
    for uid, cited in edges.items():
        for target in cited:
            if target not in edges:
                raise DanglingEdge(f"{uid} cites {target}, which is not in the dataset")
    return CitationGraph(nodes=tuple(edges), edges=edges)


def extract_neighborhood(g: CitationGraph, seed: str, hop_max: int = 1, n_max: int = 12) -> RetrievedSet:
    """Breadth-first retrieval of papers around ``seed``.

    The seed is emitted at hop 0 and every unvisited citation of a dequeued
    paper is queued at ``hop + 1``. Retrieval stops once the next dequeued hop
    exceeds ``hop_max`` or ``n_max`` papers have been emitted. Ties at the cap
    are broken by citation-list order.
    """
    if seed not in g:
        raise UnknownSeed(f"seed {seed!r} is not a graph node")
    if hop_max < 0 or n_max < 1:
        raise ValueError("need hop_max >= 0 and n_max >= 1")
    entries = []
    queue = deque([(seed, 0)])
    visited = {seed}
    while queue:
        uid, hop = queue.popleft()
        if hop > hop_max or len(entries) >= n_max:
            break
        entries.append((uid, hop))
        for cited in g.edges[uid]:
            if cited not in visited:
                visited.add(cited)
                queue.append((cited, hop + 1))
    return RetrievedSet(tuple(entries))
