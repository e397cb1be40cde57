import json
import os
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import networkx as nx

from periplan.common import TopologyError, clean_text
from periplan.data.filenames import BUNDLED_TOPOLOGIES
from periplan.network.spectrum import SlotGrid, DEFAULT_SLOT_COUNT, DEFAULT_SLOT_WIDTH


class Node:
    def __init__(self, node_id: int, name: str, dc_count: int = 0, ixp_count: int = 0):
        if dc_count < 0 or ixp_count < 0:
            raise TopologyError(f"schema violation: node {node_id} has negative DC/IXP count")
        self.id = node_id
        self.name = name
        self.dc_count = dc_count
        self.ixp_count = ixp_count

    def __repr__(self):
        return f"Node({self.id}, {self.name!r})"


class Span(NamedTuple):
    length: float
    loss_coeff: float = 0.2
    amp_noise_figure: float = 4.3

    @property
    def loss_db(self):
        return self.length * self.loss_coeff


class Link:
    """ One direction of a fiber adjacency. The spans are listed from the 'from' node towards the 'to' node.

    :type spans: list[Span]
    :type grid: SlotGrid
    """

    def __init__(self, link_id: int, endpoints: Tuple[int, int], spans: List[Span], grid: SlotGrid = None,
                 undirected_id: int = None):
        if not spans:
            raise TopologyError(f"schema violation: link {link_id} has no spans")
        self.id = link_id
        self.endpoints = tuple(endpoints)
        self.spans = list(spans)
        self.grid = grid or SlotGrid()
        self.undirected_id = link_id if undirected_id is None else undirected_id

    @property
    def source(self):
        return self.endpoints[0]

    @property
    def target(self):
        return self.endpoints[1]

    @property
    def fiber_pairs(self):
        return self.grid.fiber_pairs

    @property
    def total_length(self):
        return sum(s.length for s in self.spans)

    def __repr__(self):
        return f"Link({self.id}, {self.source}->{self.target}, {self.total_length:.1f} km)"


class Topology:
    """ Nodes plus directed links. Built once and not mutated afterwards; planning runs copy the slot grids.

    :type nodes: list[Node]
    :type links: list[Link]
    """

    def __init__(self, nodes: List[Node], links: List[Link], name: str = "topology"):
        self.name = name
        self.nodes = list(nodes)
        self.links = list(links)
        self.node_by_id = {}  # type: Dict[int, Node]
        for node in self.nodes:
            if node.id in self.node_by_id:
                raise TopologyError(f"schema violation: duplicate node id {node.id}")
            self.node_by_id[node.id] = node
        self.link_by_id = {}  # type: Dict[int, Link]
        self.link_between = {}  # type: Dict[Tuple[int, int], Link]
        for link in self.links:
            if link.id in self.link_by_id:
                raise TopologyError(f"schema violation: duplicate link id {link.id}")
            if link.endpoints in self.link_between:
                raise TopologyError(f"schema violation: links {self.link_between[link.endpoints].id} and {link.id} "
                                    f"both join {link.source} -> {link.target}")
            self.link_by_id[link.id] = link
            self.link_between[link.endpoints] = link
        self._graph = None

    @property
    def node_ids(self) -> List[int]:
        return [n.id for n in self.nodes]

    @property
    def graph(self) -> nx.DiGraph:
        """ Directed graph with one edge per link, weighted by physical length in km. """

        if self._graph is None:
            graph = nx.DiGraph()
            graph.add_nodes_from(self.node_ids)
            for link in self.links:
                graph.add_edge(link.source, link.target, length=link.total_length, link_id=link.id)
            self._graph = graph
        return self._graph

    def node(self, node_id) -> Node:
        try:
            return self.node_by_id[node_id]
        except KeyError:
            raise TopologyError(f"unknown node id {node_id}")

    def reverse_link(self, link_id) -> Optional[Link]:
        link = self.link_by_id[link_id]
        return self.link_between.get((link.target, link.source))

    def adjacencies(self) -> List[Tuple[int, int]]:
        return sorted({tuple(sorted(link.endpoints)) for link in self.links})

    def validate(self):
        for link in self.links:
            for end in link.endpoints:
                if end not in self.node_by_id:
                    raise TopologyError(f"dangling endpoint: link {link.id} references unknown node {end}")
            if link.source == link.target:
                raise TopologyError(f"schema violation: link {link.id} is a self loop")
            for span in link.spans:
                if span.length <= 0:
                    raise TopologyError(f"non-positive span length on link {link.id}: {span.length}")
                if span.loss_coeff <= 0:
                    raise TopologyError(f"non-positive loss coefficient on link {link.id}: {span.loss_coeff}")
        if not self.nodes:
            raise TopologyError("schema violation: topology has no nodes")
        if not nx.is_connected(self.graph.to_undirected(as_view=True)):
            raise TopologyError(f"disconnected graph: {self.name}")
        return self

    def degree_stats(self) -> Tuple[int, float, int]:
        degrees = [node_degree(self, n.id) for n in self.nodes]
        return min(degrees), avg_node_degree(self), max(degrees)

    def __repr__(self):
        return f"Topology({self.name!r}, {len(self.nodes)} nodes, {len(self.adjacencies())} adjacencies)"


def node_degree(topology: Topology, node_id: int) -> int:
    """ Number of undirected adjacencies incident to the node. """

    topology.node(node_id)
    return len({link.target if link.source == node_id else link.source
                for link in topology.links if node_id in link.endpoints})


def avg_node_degree(topology: Topology) -> float:
    return sum(node_degree(topology, n.id) for n in topology.nodes) / len(topology.nodes)


def add_fiber_pair(link: Link) -> Link:
    link.grid.add_fiber_pair()
    return link


def _read_source(source) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return json.loads(source)
    with open(source, "r") as f:
        return json.load(f)


def _require(entry: dict, key: str, kind: str):
    try:
        return entry[key]
    except (KeyError, TypeError):
        raise TopologyError(f"schema violation: {kind} entry {entry!r} is missing {key!r}")


def load_topology(source: Union[str, dict], slot_count: int = DEFAULT_SLOT_COUNT,
                  slot_width: float = DEFAULT_SLOT_WIDTH) -> Topology:
    """ Parses a topology document (path, JSON text or already-decoded dict) and validates it. Each undirected
      adjacency in the file becomes two directed links; link file id e yields directed links 2p and 2p+1, where p
      is the entry's position in the file. """

    try:
        data = _read_source(source)
    except json.JSONDecodeError as e:
        raise TopologyError(f"schema violation: {e}")
    if not isinstance(data, dict) or not isinstance(data.get("nodes"), list) or \
            not isinstance(data.get("links"), list):
        raise TopologyError("schema violation: document needs 'nodes' and 'links' lists")

    nodes = []
    for entry in data["nodes"]:
        try:
            node_id = int(_require(entry, "id", "node"))
            dc_count = int(entry.get("dc_count", 0))
            ixp_count = int(entry.get("ixp_count", 0))
        except (TypeError, ValueError):
            raise TopologyError(f"schema violation: bad node entry {entry!r}")
        nodes.append(Node(node_id, clean_text(str(entry.get("name", node_id))), dc_count, ixp_count))

    links = []
    for position, entry in enumerate(data["links"]):
        try:
            link_id = int(_require(entry, "id", "link"))
            source_id = int(_require(entry, "from", "link"))
            target_id = int(_require(entry, "to", "link"))
            spans = [Span(float(_require(s, "length_km", "span")),
                          float(s.get("loss_db_per_km", 0.2)),
                          float(s.get("nf_db", 4.3))) for s in _require(entry, "spans", "link")]
        except (TypeError, ValueError, AttributeError):
            raise TopologyError(f"schema violation: bad link entry {entry!r}")
        if not spans:
            raise TopologyError(f"schema violation: link {link_id} has no spans")
        links.append(Link(2 * position, (source_id, target_id), spans,
                          SlotGrid(slot_count, slot_width), undirected_id=link_id))
        links.append(Link(2 * position + 1, (target_id, source_id), list(reversed(spans)),
                          SlotGrid(slot_count, slot_width), undirected_id=link_id))

    name = data.get("name")
    if not name and isinstance(source, str) and not source.lstrip().startswith("{"):
        name = os.path.splitext(os.path.basename(source))[0]
    return Topology(nodes, links, name=name or "topology").validate()


def load_bundled(name: str, **kwargs) -> Topology:
    key = clean_text(name).lower()
    if key.endswith(".json"):
        key = key[:-5]
    if key not in BUNDLED_TOPOLOGIES:
        raise TopologyError(f"unknown bundled topology {name!r}; known: {', '.join(sorted(BUNDLED_TOPOLOGIES))}")
    return load_topology(BUNDLED_TOPOLOGIES[key], **kwargs)


def resolve_topology(name_or_path: str, **kwargs) -> Topology:
    """ Accepts either a bundled topology name or a path to a topology file. """

    if os.path.exists(name_or_path):
        return load_topology(name_or_path, **kwargs)
    return load_bundled(name_or_path, **kwargs)


def dump_topology(topology: Topology) -> dict:
    """ Serializes the topology back into the file schema, one link entry per undirected adjacency. """

    links = []
    seen = set()
    for link in topology.links:
        if link.undirected_id in seen:
            continue
        seen.add(link.undirected_id)
        links.append({
            "id": link.undirected_id,
            "from": link.source,
            "to": link.target,
            "spans": [{"length_km": s.length, "loss_db_per_km": s.loss_coeff, "nf_db": s.amp_noise_figure}
                      for s in link.spans]
        })
    return {
        "name": topology.name,
        "nodes": [{"id": n.id, "name": n.name, "dc_count": n.dc_count, "ixp_count": n.ixp_count}
                  for n in topology.nodes],
        "links": links
    }
