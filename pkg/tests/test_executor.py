import numpy as np
import pytest

from arcsim import crl
from arcsim.environment import User, UserStatus
from arcsim.executor import (Agent, EpsilonSchedule, QNetwork, execute_sequence,
                             load_agent_params, q_forward, save_agent_params,
                             select_action, select_action_index)
from arcsim.knowledge import StateHistory
from arcsim.mdp import ActionDecision, ActionKind, objective
from arcsim.sequencer import Sequence

from conftest import make_mdp, make_node, make_service, make_topology, bidirectional


def fixed_net(value_bias, advantage_bias, input_dim=4):
    """Net with zeroed trunk so Q depends only on the head biases."""
    net = QNetwork(input_dim, len(advantage_bias), hidden=8,
                   rng=np.random.default_rng(0))
    for name in ("W1", "W2", "Wv", "Wa"):
        net.params[name] = np.zeros_like(net.params[name])
    net.params["bv"] = np.array([float(value_bias)])
    net.params["ba"] = np.array(advantage_bias, dtype=float)
    return net


class TestQForward:
    def test_dueling_arithmetic(self):
        net = fixed_net(1.0, [1.0, 2.0, 3.0])
        q = q_forward(net, np.zeros(4))
        assert q == pytest.approx([0.0, 1.0, 2.0])

    def test_advantage_shift_invariance(self):
        net = fixed_net(0.5, [0.2, -0.4, 1.0])
        q1 = q_forward(net, np.ones(4))
        net.params["ba"] = net.params["ba"] + 17.0
        q2 = q_forward(net, np.ones(4))
        assert q1 == pytest.approx(q2)

    def test_zero_net_all_equal(self):
        net = fixed_net(0.0, [0.0, 0.0, 0.0, 0.0])
        q = q_forward(net, np.ones(4))
        assert np.allclose(q, q[0])

    def test_dimension_mismatch(self):
        net = fixed_net(0.0, [0.0, 0.0])
        with pytest.raises(ValueError):
            q_forward(net, np.zeros(7))

    def test_identifiability_exact(self):
        rng = np.random.default_rng(5)
        net = QNetwork(6, 4, hidden=16, rng=rng)
        x = rng.normal(size=6)
        q = net.forward(x)
        p = net.params
        z1 = np.maximum(x @ p["W1"] + p["b1"], 0.0)
        h2 = np.maximum(z1 @ p["W2"] + p["b2"], 0.0)
        v = h2 @ p["Wv"] + p["bv"]
        a = h2 @ p["Wa"] + p["ba"]
        assert q == pytest.approx(v + a - a.mean())


def _agent(net, epsilon=0.0):
    return Agent(kind=ActionKind.ROUTING, acting_net=net, training_net=net.clone(),
                 buffer=crl.ReplayBuffer(8), epsilon=epsilon)


def _decisions(count, feasible):
    out = []
    for i in range(count):
        if i in feasible:
            out.append(ActionDecision(user=0, kind=ActionKind.ROUTING, path=(0, i + 1),
                                      capacity_amount=1.0))
        else:
            out.append(None)
    return out


class TestSelectAction:
    def test_full_exploration_stays_feasible(self):
        net = fixed_net(0.0, [0.0, 0.0, 0.0])
        agent = _agent(net, epsilon=1.0)
        rng = np.random.default_rng(0)
        decisions = _decisions(3, feasible={0, 2})
        for _ in range(50):
            idx = select_action_index(agent, np.zeros(4), decisions, rng)
            assert idx in (0, 2)

    def test_greedy_argmax(self):
        net = fixed_net(0.0, [0.1, 0.9, 0.3])
        agent = _agent(net, epsilon=0.0)
        idx = select_action_index(agent, np.zeros(4), _decisions(3, {0, 1, 2}),
                                  np.random.default_rng(0))
        assert idx == 1

    def test_masked_argmax_skips_infeasible_top(self):
        net = fixed_net(0.0, [0.1, 0.9, 0.3])
        agent = _agent(net, epsilon=0.0)
        idx = select_action_index(agent, np.zeros(4), _decisions(3, {0, 2}),
                                  np.random.default_rng(0))
        assert idx == 2

    def test_tie_lowest_index(self):
        net = fixed_net(0.0, [0.5, 0.5, 0.5])
        agent = _agent(net, epsilon=0.0)
        idx = select_action_index(agent, np.zeros(4), _decisions(3, {1, 2}),
                                  np.random.default_rng(0))
        assert idx == 1

    def test_empty_feasible_raises(self):
        net = fixed_net(0.0, [0.0, 0.0])
        agent = _agent(net)
        with pytest.raises(ValueError):
            select_action(agent, np.zeros(4), [None, None], np.random.default_rng(0))


def _execution_setup(node_capacity=5.0):
    nodes = [make_node(0, 0, 0, capacity=0.0),
             make_node(1, 10, 0, capacity=node_capacity),
             make_node(2, 20, 0, capacity=50.0)]
    links = bidirectional((0, 1, 30.0), (1, 2, 40.0))
    topo = make_topology(nodes, links)
    services = {0: make_service(0, demand=4.0, rate=2.0),
                1: make_service(1, demand=4.0, rate=2.0)}
    users = [User(id=0, attach_node=0, service=0), User(id=1, attach_node=0, service=1)]
    mdp = make_mdp(topo, services, max_hops=2)
    state = mdp.index_state(topo, users, {})
    history = StateHistory(states=(state,), objective=objective("min_cost"))
    agents = {}
    for i, kind in enumerate(ActionKind):
        net = QNetwork(mdp.frame_dim(kind), mdp.action_count(kind), hidden=8,
                       rng=np.random.default_rng(10 + i))
        agents[kind] = Agent(kind=kind, acting_net=net, training_net=net.clone(),
                             buffer=crl.ReplayBuffer(16), epsilon=0.0)
    seq = Sequence(ordered=[(0, (ActionKind.PLACEMENT, ActionKind.ROUTING)),
                            (1, (ActionKind.PLACEMENT, ActionKind.ROUTING))],
                   backend_used="heuristic")
    return topo, users, mdp, history, agents, seq


class TestExecuteSequence:
    def test_contention_second_user_unsupported(self):
        topo, users, mdp, history, agents, seq = _execution_setup(node_capacity=5.0)
        # only node 1 reachable within rate for both, but compute fits one block;
        # node 2 still has room so force scarcity by shrinking it
        topo.node_map()[2].compute_available = 1.0
        state = mdp.index_state(topo, users, {})
        history = StateHistory(states=(state,), objective=objective("min_cost"))
        result = execute_sequence(seq, history, agents, topo, mdp, users,
                                  objective("min_cost"), {}, np.random.default_rng(0))
        assert users[0].status is UserStatus.SERVED
        assert users[1].status is UserStatus.UNSUPPORTED
        assert result.unsupported == [1]

    def test_empty_sequence_no_change(self):
        topo, users, mdp, history, agents, _ = _execution_setup()
        empty = Sequence(ordered=[], backend_used="heuristic")
        result = execute_sequence(empty, history, agents, topo, mdp, users,
                                  objective("min_cost"), {}, np.random.default_rng(0))
        assert result.decisions == []
        assert [(l.src, l.dst, l.capacity_available) for l in result.topology.links] == \
               [(l.src, l.dst, l.capacity_available) for l in topo.links]

    def test_rollback_restores_capacity_exactly(self):
        topo, users, mdp, history, agents, seq = _execution_setup()
        # place is feasible on node 1 only after killing node 2; then remove
        # every path by dropping all links to make routing infeasible
        topo.node_map()[2].compute_available = 0.0
        topo.links = [l for l in topo.links if (l.src, l.dst) not in ((0, 1), (1, 0))]
        before = topo.node_map()[1].compute_available
        state = mdp.index_state(topo, users, {})
        history = StateHistory(states=(state,), objective=objective("min_cost"))
        result = execute_sequence(seq, history, agents, topo, mdp, users,
                                  objective("min_cost"), {}, np.random.default_rng(0))
        assert users[0].status is UserStatus.UNSUPPORTED
        assert result.topology.node_map()[1].compute_available == pytest.approx(before)
        # the attempted placement is still recorded for zero-reward learning
        assert [r.kind for r in result.decisions if r.user == 0] == [ActionKind.PLACEMENT]

    def test_resource_conservation(self):
        topo, users, mdp, history, agents, seq = _execution_setup(node_capacity=50.0)
        result = execute_sequence(seq, history, agents, topo, mdp, users,
                                  objective("min_cost"), {}, np.random.default_rng(0))
        grants_node = {}
        grants_link = {}
        for uid, alloc in result.allocations.items():
            grants_node[alloc.node] = grants_node.get(alloc.node, 0.0) + alloc.compute_amount
            for pair in alloc.path_pairs():
                grants_link[pair] = grants_link.get(pair, 0.0) + alloc.capacity_amount
        for node in result.topology.nodes:
            original = topo.node_map()[node.id]
            assert node.compute_available == pytest.approx(
                original.compute_available - grants_node.get(node.id, 0.0))
        for link in result.topology.links:
            original = topo.link_map()[(link.src, link.dst)]
            assert link.capacity_available == pytest.approx(
                original.capacity_available - grants_link.get((link.src, link.dst), 0.0))

    def test_serial_consistency(self):
        topo, users, mdp, history, agents, seq = _execution_setup(node_capacity=50.0)
        r1 = execute_sequence(seq, history, agents, topo, mdp,
                              [User(u.id, u.attach_node, u.service) for u in users],
                              objective("min_cost"), {}, np.random.default_rng(0))
        r2 = execute_sequence(seq, history, agents, topo, mdp,
                              [User(u.id, u.attach_node, u.service) for u in users],
                              objective("min_cost"), {}, np.random.default_rng(99))
        # epsilon is 0, so the rng must not influence decisions
        assert [(r.user, r.kind, r.action_index) for r in r1.decisions] == \
               [(r.user, r.kind, r.action_index) for r in r2.decisions]


class TestEpsilonSchedule:
    def test_linear_decay(self):
        sched = EpsilonSchedule(start=1.0, end=0.0, decay_slots=100)
        assert sched.value(0) == pytest.approx(1.0)
        assert sched.value(50) == pytest.approx(0.5)
        assert sched.value(100) == pytest.approx(0.0)
        assert sched.value(500) == pytest.approx(0.0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        net = QNetwork(6, 3, hidden=8, rng=rng)
        agent = Agent(kind=ActionKind.PLACEMENT, acting_net=net, training_net=net.clone(),
                      buffer=crl.ReplayBuffer(4), epsilon=0.37)
        agent.training_net.params["W1"] = agent.training_net.params["W1"] + 1.0
        path = str(tmp_path / "agent.txt")
        save_agent_params(agent, path)

        fresh = Agent(kind=ActionKind.PLACEMENT,
                      acting_net=QNetwork(6, 3, hidden=8),
                      training_net=QNetwork(6, 3, hidden=8),
                      buffer=crl.ReplayBuffer(4), epsilon=1.0)
        load_agent_params(fresh, path)
        assert fresh.epsilon == pytest.approx(0.37)
        for name in QNetwork.PARAM_NAMES:
            assert np.array_equal(fresh.acting_net.params[name], agent.acting_net.params[name])
            assert np.array_equal(fresh.training_net.params[name],
                                  agent.training_net.params[name])
