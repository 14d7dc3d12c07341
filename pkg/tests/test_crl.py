import numpy as np
import pytest

from arcsim import crl
from arcsim.crl import (ReplayBuffer, Transition, compute_grad_feature, fifo_insert,
                        gdss_insert, sketch_gradient, train_step, sync,
                        transition_target)
from arcsim.executor import Agent, QNetwork
from arcsim.mdp import ActionKind


def unit(dim, idx):
    v = np.zeros(dim)
    v[idx] = 1.0
    return v


def make_transition(dim=6, action=0, reward=1.0, feature=None, seed=0):
    rng = np.random.default_rng(seed)
    t = Transition(masked_state=rng.normal(size=dim), action=action, reward=reward,
                   next_masked_state=np.zeros(dim), terminal=True)
    if feature is not None:
        t.grad_feature = feature / np.linalg.norm(feature)
    return t


def small_net(seed=0, dim=6, actions=3):
    return QNetwork(dim, actions, hidden=8, rng=np.random.default_rng(seed))


def make_agent(seed=0, dim=6, actions=3, capacity=64):
    net = small_net(seed, dim, actions)
    return Agent(kind=ActionKind.ROUTING, acting_net=net, training_net=net.clone(),
                 buffer=ReplayBuffer(capacity))


class TestGdssInsert:
    def test_always_admit_until_full(self):
        buffer = ReplayBuffer(capacity=4)
        net = small_net()
        rng = np.random.default_rng(0)
        for i in range(4):
            assert gdss_insert(buffer, make_transition(seed=i), net, rng)
        assert len(buffer) == 4

    def test_orthogonal_admitted_into_uniform_buffer(self):
        buffer = ReplayBuffer(capacity=3)
        net = small_net()
        rng = np.random.default_rng(0)
        shared = unit(crl.SKETCH_DIM, 0)
        for i in range(3):
            gdss_insert(buffer, make_transition(seed=i, feature=shared), net, rng)
        newcomer = make_transition(seed=9, feature=unit(crl.SKETCH_DIM, 1))
        assert gdss_insert(buffer, newcomer, net, rng)

    def test_duplicate_rejected_by_diverse_buffer(self):
        buffer = ReplayBuffer(capacity=3)
        net = small_net()
        rng = np.random.default_rng(0)
        for i in range(3):
            gdss_insert(buffer, make_transition(seed=i, feature=unit(crl.SKETCH_DIM, i)), net, rng)
        dup = make_transition(seed=9, feature=unit(crl.SKETCH_DIM, 0))
        assert not gdss_insert(buffer, dup, net, rng)

    def test_capacity_never_exceeded_and_counts_reconcile(self):
        buffer = ReplayBuffer(capacity=16)
        net = small_net()
        rng = np.random.default_rng(3)
        attempts = 200
        for i in range(attempts):
            gdss_insert(buffer, make_transition(seed=i, reward=float(i % 5)), net, rng)
            assert len(buffer) <= 16
        assert buffer.admitted + buffer.rejected == attempts

    def test_grad_feature_unit_norm(self):
        net = small_net()
        t = make_transition(seed=1)
        feature = compute_grad_feature(t, net, gamma=0.9)
        assert np.linalg.norm(feature) == pytest.approx(1.0, abs=1e-9)


class TestDiversityProperty:
    def test_gdss_beats_fifo_on_clustered_stream(self):
        """Ten gradient-direction clusters into capacity-50 buffers, 20 seeds."""
        dim = crl.SKETCH_DIM
        net = small_net()
        for seed in range(20):
            rng = np.random.default_rng(seed)
            dirs = rng.normal(size=(10, dim))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            stream = []
            for cluster in range(10):
                for _ in range(60):
                    noisy = dirs[cluster] + 0.05 * rng.normal(size=dim)
                    stream.append(noisy / np.linalg.norm(noisy))
            g_buf, f_buf = ReplayBuffer(50), ReplayBuffer(50)
            g_rng = np.random.default_rng(1000 + seed)
            f_rng = np.random.default_rng(2000 + seed)
            for i, feat in enumerate(stream):
                gdss_insert(g_buf, make_transition(seed=i, feature=feat.copy()), net, g_rng)
                fifo_insert(f_buf, make_transition(seed=i, feature=feat.copy()), net, f_rng)

            def mean_pairwise(buf):
                feats = buf.feature_matrix()
                sims = feats @ feats.T
                n = len(feats)
                return (sims.sum() - n) / (n * (n - 1))

            assert mean_pairwise(g_buf) <= mean_pairwise(f_buf)


class TestTrainStep:
    def test_empty_buffer_marker(self):
        agent = make_agent()
        assert train_step(agent, 8, 0.9, 1e-3, np.random.default_rng(0)) is None

    def test_zero_rewards_drive_loss_to_zero(self):
        agent = make_agent(capacity=32)
        rng = np.random.default_rng(0)
        for i in range(32):
            gdss_insert(agent.buffer, make_transition(seed=i, reward=0.0),
                        agent.training_net, rng)
        losses = [train_step(agent, 16, 0.0, 2e-2, rng) for _ in range(1500)]
        assert losses[-1] < 1e-3
        assert losses[-1] < losses[0]

    def test_bandit_learns_best_arm(self):
        agent = make_agent(seed=3, dim=4, actions=2, capacity=32)
        rng = np.random.default_rng(7)
        state = np.ones(4)
        for i in range(32):
            t = Transition(masked_state=state.copy(), action=i % 2,
                           reward=1.0 if i % 2 == 0 else 0.0,
                           next_masked_state=np.zeros(4), terminal=True)
            gdss_insert(agent.buffer, t, agent.training_net, rng)
        for _ in range(500):
            train_step(agent, 16, 0.0, 1e-2, rng)
        sync(agent)
        q = agent.acting_net.forward(state)
        assert q[0] > q[1]

    def test_double_q_decoupling(self):
        """Argmax comes from the acting net, the value from the training net."""
        from test_executor import fixed_net
        acting = fixed_net(0.0, [0.0, 10.0, 0.0])   # argmax -> action 1
        training = fixed_net(0.0, [5.0, 1.0, 9.0])  # its own max is action 2
        t = Transition(masked_state=np.zeros(4), action=0, reward=0.5,
                       next_masked_state=np.zeros(4), terminal=False)
        target = transition_target(t, acting, training, gamma=0.9)
        q_training = training.forward(np.zeros(4))
        assert target == pytest.approx(0.5 + 0.9 * q_training[1])
        assert target != pytest.approx(0.5 + 0.9 * q_training[2])

    def test_terminal_target_is_reward(self):
        acting, training = small_net(1), small_net(2)
        t = Transition(masked_state=np.zeros(6), action=1, reward=2.5,
                       next_masked_state=np.zeros(6), terminal=True)
        assert transition_target(t, acting, training, gamma=0.9) == pytest.approx(2.5)


class TestSync:
    def test_copies_parameters(self):
        agent = make_agent()
        agent.training_net.params["W1"] = agent.training_net.params["W1"] + 3.0
        sync(agent)
        x = np.random.default_rng(0).normal(size=6)
        assert np.array_equal(agent.acting_net.forward(x), agent.training_net.forward(x))

    def test_idempotent(self):
        agent = make_agent()
        sync(agent)
        first = {k: v.copy() for k, v in agent.acting_net.params.items()}
        sync(agent)
        for k in first:
            assert np.array_equal(agent.acting_net.params[k], first[k])

    def test_training_isolated_until_next_sync(self):
        agent = make_agent(capacity=16)
        rng = np.random.default_rng(0)
        for i in range(16):
            gdss_insert(agent.buffer, make_transition(seed=i), agent.training_net, rng)
        sync(agent)
        before = {k: v.copy() for k, v in agent.acting_net.params.items()}
        for _ in range(10):
            train_step(agent, 8, 0.9, 1e-2, rng)
        for k in before:
            assert np.array_equal(agent.acting_net.params[k], before[k])


def finite_difference_grads(net, states, actions, targets, eps=1e-6):
    """Central-difference oracle for the batch training loss."""
    grads = {}
    for name in net.PARAM_NAMES:
        param = net.params[name]
        grad = np.zeros_like(param)
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi, _ = net.loss_and_grads(states, actions, targets)
            flat[i] = orig - eps
            lo, _ = net.loss_and_grads(states, actions, targets)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads[name] = grad
    return grads


class TestGradientCheck:
    @pytest.mark.parametrize("seed", range(3))
    def test_analytic_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        net = QNetwork(5, 3, hidden=8, rng=rng)
        states = rng.normal(size=(4, 5))
        actions = rng.integers(0, 3, size=4)
        targets = rng.normal(size=4)
        _, analytic = net.loss_and_grads(states, actions, targets)
        numeric = finite_difference_grads(net, states, actions, targets)
        for name in net.PARAM_NAMES:
            num = numeric[name].reshape(-1)
            ana = analytic[name].reshape(-1)
            denom = max(float(np.linalg.norm(num)), 1e-12)
            assert float(np.linalg.norm(ana - num)) / denom < 1e-4


class TestSketch:
    def test_deterministic_across_calls(self):
        net = small_net()
        t1 = make_transition(seed=5)
        t2 = make_transition(seed=5)
        f1 = compute_grad_feature(t1, net, 0.9)
        f2 = compute_grad_feature(t2, net, 0.9)
        assert np.array_equal(f1, f2)

    def test_zero_gradient_fallback(self):
        grads = {"W": np.zeros((3, 3))}
        s = sketch_gradient(grads)
        assert np.linalg.norm(s) == pytest.approx(1.0)
