from itertools import islice
from typing import Dict, List, NamedTuple, Sequence, Tuple

import networkx as nx
import numpy as np

from periplan.common import RoutingError, TopologyError
from periplan.network.spectrum import SlotGrid, free_runs_in_mask
from periplan.network.topology import Span, Topology

BLOCKED = "blocked"


class CandidatePath(NamedTuple):
    node_sequence: Tuple[int, ...]
    link_sequence: Tuple[int, ...]
    total_length: float

    @property
    def source(self):
        return self.node_sequence[0]

    @property
    def target(self):
        return self.node_sequence[-1]

    def spans(self, topology: Topology) -> List[Span]:
        return [span for link_id in self.link_sequence for span in topology.link_by_id[link_id].spans]

    def __str__(self):
        return "-".join(str(n) for n in self.node_sequence)


def _to_candidate(topology: Topology, nodes: Sequence[int]) -> CandidatePath:
    links = tuple(topology.link_between[(a, b)].id for a, b in zip(nodes, nodes[1:]))
    length = sum(topology.link_by_id[link_id].total_length for link_id in links)
    return CandidatePath(tuple(nodes), links, length)


def k_shortest_paths(topology: Topology, i: int, j: int, k: int = 3) -> List[CandidatePath]:
    """ Up to k loop-free paths from i to j in non-decreasing length (km), by Yen's algorithm as implemented in
      networkx.shortest_simple_paths. """

    if k < 1:
        raise RoutingError(f"k must be at least 1, got {k}")
    if i == j:
        raise RoutingError(f"source and destination are both {i}")
    for node_id in (i, j):
        if node_id not in topology.node_by_id:
            raise TopologyError(f"unknown node id {node_id}")

    try:
        paths = list(islice(nx.shortest_simple_paths(topology.graph, i, j, weight="length"), k))
    except nx.NetworkXNoPath:
        raise RoutingError(f"no path exists between {i} and {j}")
    return [_to_candidate(topology, p) for p in paths]


def _common_free_mask(path: CandidatePath, link_grids: Dict[int, SlotGrid], fiber_pair_index: int) -> np.ndarray:
    mask = None
    for link_id in path.link_sequence:
        free = ~link_grids[link_id].occupancy[fiber_pair_index]
        mask = free if mask is None else mask & free
    return mask


def _shared_fiber_pairs(path: CandidatePath, link_grids: Dict[int, SlotGrid]) -> int:
    return min(link_grids[link_id].fiber_pairs for link_id in path.link_sequence)


def path_free_weight(path: CandidatePath, link_grids: Dict[int, SlotGrid]) -> int:
    """ Longest slot run free on every link of the path within one fiber-pair index. """

    best = 0
    for f in range(_shared_fiber_pairs(path, link_grids)):
        runs = free_runs_in_mask(_common_free_mask(path, link_grids, f))
        if runs:
            best = max(best, max(length for _, length in runs))
    return best


def choose_path(candidates: Sequence[CandidatePath], weights: Sequence[float],
                rng: np.random.Generator) -> CandidatePath:
    """ Samples a candidate with probability proportional to its weight; all-zero weights fall back to the
      shortest candidate. """

    if not candidates:
        raise RoutingError("empty candidate list")
    if len(weights) != len(candidates):
        raise RoutingError(f"{len(weights)} weights for {len(candidates)} candidates")

    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total <= 0:
        return min(candidates, key=lambda c: c.total_length)
    return candidates[int(rng.choice(len(candidates), p=w / total))]


def first_fit(path: CandidatePath, slot_count: int, link_grids: Dict[int, SlotGrid]):
    """ Lowest (fiber pair, start slot) where slot_count slots are free on every path link, or BLOCKED. """

    if slot_count < 1:
        raise RoutingError(f"slot_count must be at least 1, got {slot_count}")
    for f in range(_shared_fiber_pairs(path, link_grids)):
        for start, length in free_runs_in_mask(_common_free_mask(path, link_grids, f)):
            if length >= slot_count:
                return f, start
    return BLOCKED


class PathCache:
    """ Candidate paths per ordered pair; the physical topology never changes, so they are computed once. """

    def __init__(self, topology: Topology, k: int):
        self.topology = topology
        self.k = k
        self.paths = {}  # type: Dict[Tuple[int, int], List[CandidatePath]]

    def candidates(self, pair: Tuple[int, int]) -> List[CandidatePath]:
        if pair not in self.paths:
            self.paths[pair] = k_shortest_paths(self.topology, pair[0], pair[1], self.k)
        return self.paths[pair]

