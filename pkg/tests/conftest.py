import numpy as np
import pytest

from arcsim.environment import (FunctionalBlock, Layer, Link, MobilitySpec, Node,
                                ServiceSpec, Topology, User)
from arcsim.harness import ScenarioConfig
from arcsim.mdp import Mdp


def make_node(nid, x, y, z=0.0, capacity=50.0, layer=Layer.GROUND, orbit=None,
              cost=None, available=None):
    cost = capacity if cost is None else cost
    available = capacity if available is None else available
    return Node(id=nid, layer=layer, position=np.array([x, y, z], dtype=float),
                compute_capacity=capacity, compute_available=available,
                compute_cost=cost, orbit=orbit)


def make_link(src, dst, capacity, latency=5.0, available=None):
    available = capacity if available is None else available
    return Link(src=src, dst=dst, latency=latency, capacity=capacity,
                capacity_available=available, cost=capacity)


def make_topology(nodes, directed_pairs_with_capacity, slot=0, d_max=1000.0):
    """Hand-built topology; links are (src, dst, capacity[, latency]) tuples."""
    links = []
    for spec in directed_pairs_with_capacity:
        if len(spec) == 3:
            src, dst, cap = spec
            links.append(make_link(src, dst, cap))
        else:
            src, dst, cap, lat = spec
            links.append(make_link(src, dst, cap, latency=lat))
    return Topology(nodes=list(nodes), links=links, slot=slot, d_max=d_max)


def make_service(sid=0, demand=3.0, rate=5.0, threshold=0.99):
    return ServiceSpec(id=sid, blocks=(FunctionalBlock(id=0, compute_demand=demand),),
                       qoe_requirement="the image must be 1920x1080 to be acceptable",
                       qoe_threshold=threshold, rate_requirement=rate)


@pytest.fixture
def reference_config():
    return ScenarioConfig(iterations=10, events=[])


def bidirectional(*triples):
    out = []
    for src, dst, cap in triples:
        out.append((src, dst, cap))
        out.append((dst, src, cap))
    return out


def make_mdp(topology, services, max_hops=3, path_slots=8, **kw):
    return Mdp(len(topology.nodes), services,
               demand_range=(2.0, 5.0), rate_range=(1.0, 8.0),
               max_hops=max_hops, path_slots=path_slots, **kw)
