import json

import pytest

from periplan.common import TopologyError
from periplan.network.topology import (add_fiber_pair, avg_node_degree, dump_topology, load_bundled, load_topology,
                                       node_degree, resolve_topology)
from periplan.planning.traffic import initial_traffic


def test_germany17_reference_figures(germany17):
    assert len(germany17.nodes) == 17
    assert len(germany17.adjacencies()) == 26
    assert len(germany17.links) == 52
    assert len(initial_traffic(germany17)) == 272

    low, average, high = germany17.degree_stats()
    assert (low, high) == (2, 6)
    assert average == pytest.approx(52 / 17)


def test_abilene12_reference_figures(abilene12):
    assert len(abilene12.nodes) == 12
    assert len(abilene12.adjacencies()) == 15
    assert len(initial_traffic(abilene12)) == 132
    assert abilene12.degree_stats() == (1, 2.5, 4)


def test_bundled_aliases_resolve_to_the_same_file():
    assert load_bundled("us-abilene").name == load_bundled("abilene12").name
    assert resolve_topology("germany17.json").name == "Germany17"


def test_unknown_bundled_name():
    with pytest.raises(TopologyError):
        load_bundled("atlantis")


def test_directed_link_ids_and_reverse_spans(triangle):
    assert [link.id for link in triangle.links] == [0, 1, 2, 3, 4, 5]
    forward = triangle.link_between[(1, 3)]
    backward = triangle.reverse_link(forward.id)
    assert backward.endpoints == (3, 1)
    assert backward.spans == list(reversed(forward.spans))
    assert forward.undirected_id == backward.undirected_id == 3
    assert forward.total_length == 200


def test_span_defaults(triangle):
    span = triangle.link_between[(1, 2)].spans[0]
    assert span.loss_coeff == 0.2
    assert span.amp_noise_figure == 4.3
    assert span.loss_db == pytest.approx(16.0)


def test_graph_is_weighted_by_length(triangle):
    assert triangle.graph[1][3]["length"] == 200
    assert triangle.graph[2][1]["link_id"] == triangle.link_between[(2, 1)].id


def test_node_degree(triangle):
    assert node_degree(triangle, 1) == 2
    assert avg_node_degree(triangle) == 2
    with pytest.raises(TopologyError):
        node_degree(triangle, 9)


def test_dangling_endpoint(triangle_data):
    triangle_data["links"].append({"id": 4, "from": 3, "to": 9, "spans": [{"length_km": 10}]})
    with pytest.raises(TopologyError, match="dangling endpoint"):
        load_topology(triangle_data)


def test_non_positive_span(triangle_data):
    triangle_data["links"][0] = {"id": 1, "from": 1, "to": 2, "spans": [{"length_km": 0}]}
    with pytest.raises(TopologyError, match="non-positive span length"):
        load_topology(triangle_data)


def test_disconnected_graph(triangle_data):
    triangle_data["nodes"].append({"id": 4, "name": "D"})
    with pytest.raises(TopologyError, match="disconnected graph"):
        load_topology(triangle_data)


def test_schema_violation():
    with pytest.raises(TopologyError, match="schema violation"):
        load_topology({"nodes": [{"name": "nameless"}], "links": []})
    with pytest.raises(TopologyError, match="schema violation"):
        load_topology("{not json")
    with pytest.raises(TopologyError, match="schema violation"):
        load_topology({"nodes": []})


def test_parallel_links_are_rejected(triangle_data):
    triangle_data["links"].append({"id": 4, "from": 2, "to": 1, "spans": [{"length_km": 90}]})
    with pytest.raises(TopologyError, match="schema violation"):
        load_topology(triangle_data)


def test_load_from_file(tmp_path, triangle_data):
    path = tmp_path / "tri.json"
    del triangle_data["name"]
    path.write_text(json.dumps(triangle_data))
    topology = load_topology(str(path))
    assert topology.name == "tri"
    assert len(topology.links) == 6


def test_dump_and_reload(germany17):
    again = load_topology(dump_topology(germany17))
    assert again.name == germany17.name
    assert [(n.id, n.name, n.dc_count, n.ixp_count) for n in again.nodes] == \
        [(n.id, n.name, n.dc_count, n.ixp_count) for n in germany17.nodes]
    assert [(link.id, link.endpoints, link.spans) for link in again.links] == \
        [(link.id, link.endpoints, link.spans) for link in germany17.links]


def test_add_fiber_pair(triangle):
    link = triangle.links[0]
    link.grid.allocate(0, 0, 96)
    assert link.grid.occupancy_ratio() == 0.25
    add_fiber_pair(link)
    assert link.fiber_pairs == 2
    assert link.grid.occupancy_ratio() == 0.125
