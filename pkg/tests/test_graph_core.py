from math import comb

import networkx as nx
import numpy as np
import pytest

from app.core.errors import PatternTooLargeError, PreconditionError
from app.models.graph import BlowupLabeling, BlowupVertex, Graph, Pattern
from app.services.graph_constructions import (
    bowtie,
    complete_graph,
    cycle_graph,
    path_graph,
    triangle_with_pendant,
)
from app.services.graph_core import (
    canonical_form,
    canonical_graph,
    core,
    count_triangles,
    edge_triangle_counts,
    find_homomorphism,
    hom_copies,
    hom_count,
    is_hom_free,
    is_isomorphic,
    is_triangle_free,
    triangle_index,
    unique_copy_property,
)


# Graph model

def test_graph_rejects_loops_and_asymmetric_rows():
    with pytest.raises(PreconditionError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(PreconditionError):
        Graph(2, [0b10, 0b00])
    with pytest.raises(PreconditionError):
        Graph.from_edges(2, [(0, 2)])


def test_edges_are_sorted_pairs():
    g = Graph.from_edges(4, [(3, 0), (2, 1), (1, 0)])
    assert g.edges == ((0, 1), (0, 3), (1, 2))
    assert g.edge_count == 3
    assert g.neighbors(0) == [1, 3]
    assert g.degree(1) == 2


def test_without_edges_and_induced():
    k4 = complete_graph(4)
    assert k4.without_edges([(0, 1), (2, 3)]).edge_count == 4
    sub = k4.induced([3, 1, 2])
    assert sub.n == 3 and sub.edge_count == 3


def test_is_connected():
    assert cycle_graph(5).is_connected()
    assert not Graph.from_edges(4, [(0, 1), (2, 3)]).is_connected()
    assert Graph(0).is_connected()


def test_blowup_labeling_index_layout():
    labeling = BlowupLabeling(3, 2)
    assert labeling.size == 12
    assert labeling.index(1, (1, 0)) == 5
    assert labeling.vertex(5) == BlowupVertex(1, (1, 0))
    assert labeling.vertex(5).label() == "1:10"
    assert labeling.fiber(2) == range(8, 12)
    assert all(labeling.index(*labeling.vertex(k)) == k for k in range(labeling.size))


# Triangles

@pytest.mark.parametrize("k", range(0, 8))
def test_complete_graph_triangle_count(k):
    assert count_triangles(complete_graph(k)) == comb(k, 3)


@pytest.mark.parametrize("seed", range(10))
def test_triangle_count_matches_networkx(seed, from_nx):
    h = nx.gnp_random_graph(12, 0.45, seed=seed)
    g = from_nx(h)
    assert count_triangles(g) == sum(nx.triangles(h).values()) // 3


def test_triangle_index_is_consistent(bowtie_graph):
    index = triangle_index(bowtie_graph)
    assert sorted(index.triangles) == [(0, 1, 2), (0, 3, 4)]
    assert index.edge_counts == edge_triangle_counts(bowtie_graph)
    assert sum(index.edge_counts.values()) == 3 * len(index.triangles)
    assert index.max_count() == 1


def test_triangle_free_checks():
    assert is_triangle_free(cycle_graph(5))
    assert not is_triangle_free(bowtie())


# Homomorphisms

def test_hom_counts_of_small_patterns(bowtie_graph):
    assert hom_count(complete_graph(3), complete_graph(3)) == 6
    assert hom_count(complete_graph(2), bowtie_graph) == 2 * bowtie_graph.edge_count
    assert hom_count(complete_graph(1), bowtie_graph) == bowtie_graph.n
    assert hom_count(Graph(0), bowtie_graph) == 1
    assert hom_count(complete_graph(3), cycle_graph(5)) == 0


def test_path_hom_count_is_sum_of_squared_degrees(bowtie_graph):
    expected = sum(bowtie_graph.degree(u) ** 2 for u in range(bowtie_graph.n))
    assert hom_count(path_graph(3), bowtie_graph) == expected


def test_hom_freeness():
    assert is_hom_free(complete_graph(3), cycle_graph(6))
    assert not is_hom_free(cycle_graph(5), complete_graph(3))
    assert is_hom_free(cycle_graph(5), complete_graph(2))
    image = find_homomorphism(cycle_graph(5), complete_graph(3))
    assert image is not None
    k3 = complete_graph(3)
    assert all(k3.has_edge(image[u], image[v]) for u, v in cycle_graph(5).edges)


def test_hom_copies_deduplicate_by_edge_set(bowtie_graph):
    copies = hom_copies(complete_graph(3), bowtie_graph)
    assert [c.vertices for c in copies] == [(0, 1, 2), (0, 3, 4)]
    assert all(len(c.edges) == 3 for c in copies)
    assert len(hom_copies(complete_graph(2), bowtie_graph)) == bowtie_graph.edge_count


def test_pattern_guard():
    with pytest.raises(PatternTooLargeError):
        hom_count(cycle_graph(9), complete_graph(3))


# Cores

@pytest.mark.parametrize(
    "graph, vertices, edges",
    [
        (cycle_graph(4), 2, 1),
        (complete_graph(3), 3, 3),
        (cycle_graph(5), 5, 5),
        (bowtie(), 3, 3),
        (triangle_with_pendant(), 3, 3),
        (Graph(3), 1, 0),
        (path_graph(4), 2, 1),
    ],
)
def test_core_sizes(graph, vertices, edges):
    c = core(graph)
    assert (c.n, c.edge_count) == (vertices, edges)


def test_pattern_core_is_cached():
    pattern = Pattern(cycle_graph(6))
    assert pattern.core is pattern.core
    assert pattern.core.edge_count == 1


def test_unique_copy_property(bowtie_graph, triangle):
    assert unique_copy_property(bowtie_graph, triangle)
    assert not unique_copy_property(complete_graph(4), triangle)


# Isomorphism

def test_canonical_form_separates_five_vertex_atlas(from_nx):
    graphs = [from_nx(h) for h in nx.graph_atlas_g() if h.number_of_nodes() == 5]
    keys = [canonical_form(g) for g in graphs]
    assert len(graphs) == 34
    assert len(set(keys)) == len(graphs)


@pytest.mark.parametrize("seed", range(8))
def test_relabelling_preserves_canonical_form(seed, from_nx):
    g = from_nx(nx.gnp_random_graph(7, 0.5, seed=seed))
    perm = [int(x) for x in np.random.default_rng(seed).permutation(g.n)]
    moved = g.relabel(perm)
    assert is_isomorphic(g, moved)
    assert canonical_graph(g) == canonical_graph(moved)
    assert is_isomorphic(canonical_graph(g), g)


@pytest.mark.parametrize("seed", range(8))
def test_isomorphism_agrees_with_networkx(seed, from_nx, to_nx):
    a = from_nx(nx.gnp_random_graph(6, 0.5, seed=seed))
    b = from_nx(nx.gnp_random_graph(6, 0.5, seed=seed + 100))
    assert is_isomorphic(a, b) == nx.is_isomorphic(to_nx(a), to_nx(b))
