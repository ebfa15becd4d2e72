from itertools import product

import networkx as nx
import pytest

from app.core.errors import InstanceTooLargeError, PreconditionError, SizeMismatchError, TargetBoundTooLargeError
from app.models.graph import Graph
from app.models.schemas import VertexMap, ViolationReport
from app.services.approx_hom import (
    enumerate_hom_free_targets,
    exact_min_violations,
    heuristic_min_violations,
    min_target_size,
    violations,
)
from app.services.graph_constructions import bowtie, complete_graph, cycle_graph
from app.services.graph_core import is_hom_free, is_isomorphic


def brute_force_min(g: Graph, f: Graph) -> int:
    return min(
        sum(1 for u, v in g.edges if not f.has_edge(table[u], table[v]))
        for table in product(range(f.n), repeat=g.n)
    )


def test_violations_of_identity_and_collapse(bowtie_graph):
    assert violations(bowtie_graph, bowtie_graph, VertexMap.identity(5)).violations == 0
    collapsed = VertexMap(source_size=5, target_size=5, table=(0,) * 5)
    report = violations(bowtie_graph, bowtie_graph, collapsed)
    assert report.violations == bowtie_graph.edge_count
    assert report.epsilon_achieved == pytest.approx(6 / 25)


def test_violations_size_mismatch(bowtie_graph):
    with pytest.raises(SizeMismatchError):
        violations(bowtie_graph, complete_graph(3), VertexMap.identity(5))
    with pytest.raises(SizeMismatchError):
        VertexMap(source_size=3, target_size=2, table=(0, 1, 2))


def test_violation_report_rejects_impossible_counts():
    with pytest.raises(PreconditionError):
        ViolationReport(violations=-1, edge_count=3, source_size=3, epsilon_achieved=0.0)
    with pytest.raises(SizeMismatchError):
        ViolationReport(violations=4, edge_count=3, source_size=3, epsilon_achieved=0.5)


@pytest.mark.parametrize("M, classes", [(0, 1), (1, 1), (2, 2), (3, 3), (4, 7), (5, 14)])
def test_triangle_free_target_classes(triangle, M, classes):
    targets = enumerate_hom_free_targets(triangle, M)
    assert len(targets) == classes
    assert all(t.n == M and is_hom_free(triangle, t) for t in targets)
    for a in range(len(targets)):
        for b in range(a + 1, len(targets)):
            assert not is_isomorphic(targets[a], targets[b])


def test_target_bound_guard(triangle):
    with pytest.raises(TargetBoundTooLargeError):
        enumerate_hom_free_targets(triangle, 8)


def test_known_minimum_violations(bowtie_graph):
    assert exact_min_violations(complete_graph(4), complete_graph(3)).report.violations == 1
    assert exact_min_violations(cycle_graph(5), complete_graph(2)).report.violations == 1
    assert exact_min_violations(bowtie_graph, complete_graph(2)).report.violations == 2
    assert exact_min_violations(cycle_graph(5), cycle_graph(5)).report.violations == 0


def test_exact_map_realises_its_count(bowtie_graph):
    result = exact_min_violations(bowtie_graph, complete_graph(2))
    assert result.exact
    assert violations(bowtie_graph, complete_graph(2), result.phi).violations == result.report.violations


@pytest.mark.parametrize("seed", range(12))
def test_exact_matches_exhaustive_enumeration(seed, triangle, from_nx):
    g = from_nx(nx.gnp_random_graph(6, 0.5, seed=seed))
    targets = [t for M in (1, 2, 3) for t in enumerate_hom_free_targets(triangle, M)]
    targets += [complete_graph(3), complete_graph(4)]
    for f in targets:
        assert exact_min_violations(g, f).report.violations == brute_force_min(g, f)


def test_exact_source_guard():
    with pytest.raises(InstanceTooLargeError):
        exact_min_violations(cycle_graph(15), complete_graph(2))


def test_heuristic_without_iterations_keeps_the_start_map(bowtie_graph):
    result = heuristic_min_violations(bowtie_graph, complete_graph(3), seed=1, iterations=0)
    assert result.report.violations == bowtie_graph.edge_count
    assert result.phi.table == (0,) * 5
    assert not result.exact


@pytest.mark.parametrize("seed", range(4))
def test_heuristic_never_beats_exact(seed):
    g = complete_graph(5)
    f = cycle_graph(5)
    best = exact_min_violations(g, f).report.violations
    found = heuristic_min_violations(g, f, seed=seed, iterations=5_000)
    assert found.report.violations >= best
    assert violations(g, f, found.phi).violations == found.report.violations


def test_heuristic_is_seeded():
    g = bowtie()
    a = heuristic_min_violations(g, complete_graph(2), seed=7, iterations=500)
    b = heuristic_min_violations(g, complete_graph(2), seed=7, iterations=500)
    assert a.phi == b.phi


def test_min_target_size_of_five_cycle(triangle):
    c5 = cycle_graph(5)
    assert min_target_size(c5, triangle, 0.2, 3) == 1
    assert min_target_size(c5, triangle, 0.04, 3) == 2
    assert min_target_size(c5, triangle, 0.0, 4) is None
    assert min_target_size(c5, triangle, 0.0, 5) == 5
    with pytest.raises(TargetBoundTooLargeError):
        min_target_size(c5, triangle, 0.1, 9)
