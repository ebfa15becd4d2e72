import networkx as nx
import numpy as np
import pytest

from app.models.graph import Graph, Pattern
from app.services.graph_constructions import bowtie, complete_graph


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle():
    return Pattern(complete_graph(3))


@pytest.fixture
def bowtie_graph():
    return bowtie()


@pytest.fixture
def to_nx():
    def convert(g: Graph) -> nx.Graph:
        out = nx.Graph()
        out.add_nodes_from(range(g.n))
        out.add_edges_from(g.edges)
        return out

    return convert


@pytest.fixture
def from_nx():
    def convert(h: nx.Graph) -> Graph:
        order = {v: k for k, v in enumerate(sorted(h.nodes()))}
        return Graph.from_edges(len(order), ((order[u], order[v]) for u, v in h.edges()))

    return convert
