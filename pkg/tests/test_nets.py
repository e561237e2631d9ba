from __future__ import annotations

import numpy as np
import pytest

from carl_lab.errors import DimMismatch, StaleCache
from carl_lab.nets import (
    MLP,
    CGateNet,
    ConditionedNet,
    copy_params,
    gradcheck_suite,
    gradient_check,
    load_params,
    n_params,
    polyak_update,
    save_params,
)


def _set(mlp: MLP, weights, biases):
    mlp.weights = [np.array(w, dtype=float) for w in weights]
    mlp.biases = [np.array(b, dtype=float) for b in biases]
    mlp.mark_updated()


def test_identity_linear_layer():
    net = MLP([3, 3], output_activation="linear")
    _set(net, [np.eye(3)], [np.zeros(3)])
    x = np.array([0.5, -2.0, 7.0])
    assert net(x).tolist() == x.tolist()


def test_zero_weights_give_activation_of_bias():
    net = MLP([2, 3], output_activation="tanh")
    _set(net, [np.zeros((2, 3))], [[0.1, -0.2, 0.3]])
    assert net([5.0, -5.0]) == pytest.approx(np.tanh([0.1, -0.2, 0.3]))


def test_hand_set_relu_net():
    # h = relu([x1 - x2, x1 + x2 - 1]), y = 2 h1 - h2 + 0.5
    net = MLP([2, 2, 1], "relu", "linear")
    _set(net, [[[1, 1], [-1, 1]], [[2], [-1]]], [[0, -1], [0.5]])
    assert net([3.0, 1.0])[0] == 2 * 2 - 3 + 0.5
    assert net([0.0, 1.0])[0] == 0.5  # both hidden units clamp to 0


def test_linear_backward_is_input():
    net = MLP([1, 1])
    _set(net, [[[1.7]]], [[0.0]])
    _, cache = net.forward([2.5])
    grads, g_in = net.backward(cache, [1.0])
    assert grads[0][0, 0] == 2.5 and grads[1][0] == 1.0
    assert g_in[0] == pytest.approx(1.7)


def _identity_cgate():
    net = CGateNet(2, 2, 2, embed_dim=2, hidden=2)
    for part in net.parts:
        _set(part, [np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)])
    net.mark_updated()
    return net


def test_hadamard_gradients():
    net = _identity_cgate()
    out, cache = net.forward([1.0, 2.0], [3.0, 4.0])
    assert out.tolist() == [3.0, 8.0]
    _, (g_state, g_ctx) = net.backward(cache, [1.0, 1.0])
    assert g_state.tolist() == [3.0, 4.0]
    assert g_ctx.tolist() == [1.0, 2.0]


def test_open_gate_equals_head_of_phi():
    rng = np.random.default_rng(0)
    net = CGateNet(3, 2, 4, embed_dim=5, hidden=6, rng=rng)
    gate = net.context_branch
    _set(gate, [np.zeros((2, 6)), np.zeros((6, 5))], [np.zeros(6), np.ones(5)])
    s = rng.standard_normal((7, 3))
    c = rng.standard_normal((7, 2))
    assert np.array_equal(net(s, c), net.head(net.state_branch(s)))


def test_closed_gate_ignores_state():
    rng = np.random.default_rng(1)
    net = CGateNet(3, 2, 4, embed_dim=5, hidden=6, rng=rng)
    _set(net.context_branch, [np.zeros((2, 6)), np.zeros((6, 5))], [np.zeros(6), np.zeros(5)])
    a = net(rng.standard_normal(3), [0.3, 0.1])
    b = net(rng.standard_normal(3), [0.3, 0.1])
    assert np.array_equal(a, b)
    assert np.array_equal(a, net.head(np.zeros(5)))


def test_context_modulates_output():
    net = CGateNet(3, 2, 1, embed_dim=8, hidden=8, rng=3)
    s = np.array([0.2, -0.4, 0.9])
    assert net(s, [1.0, 0.0])[0] != net(s, [0.0, 1.0])[0]


def test_gradcheck_fresh_nets():
    rng = np.random.default_rng(4)
    mlp = MLP([4, 8, 8, 2], "relu", "linear", rng)
    assert gradient_check(mlp, [rng.standard_normal((3, 4))]) < 1e-5
    cg = CGateNet(3, 2, 2, embed_dim=8, hidden=8, rng=rng)
    assert gradient_check(cg, [rng.standard_normal((3, 3)), rng.standard_normal((3, 2))]) < 1e-5


def test_gradcheck_suite_under_tolerance():
    results = gradcheck_suite(20, seed=0)
    assert len(results) == 20
    assert {name.split("(")[0].split("[")[0] for name, _ in results} == {"MLP", "CGateNet"}
    assert max(err for _, err in results) < 1e-5


@pytest.mark.parametrize("mode", ["hidden", "concat_all", "concat_changing", "cgate"])
def test_conditioned_net_gradcheck(mode):
    rng = np.random.default_rng(5)
    ctx_dim = 0 if mode == "hidden" else 3
    net = ConditionedNet(mode, 2, ctx_dim, 2, (6, 6), 4, output_activation="tanh", rng=rng)
    err = gradient_check(net, [rng.standard_normal((4, 2)), rng.standard_normal((4, ctx_dim))])
    assert err < 1e-5


def test_zero_parameter_net_has_zero_error():
    net = MLP([3, 0])
    assert n_params(net) == 0
    assert gradient_check(net, [np.ones((2, 3))]) == 0.0


def test_empty_context_degrades_to_plain_network():
    net = ConditionedNet("cgate", 3, 0, 1, (8, 8), rng=0)
    plain = ConditionedNet("hidden", 3, 0, 1, (8, 8), rng=0)
    s = np.ones((2, 3))
    assert np.array_equal(net(s, np.zeros((2, 0))), plain(s))


def test_dimension_checks():
    net = ConditionedNet("concat_changing", 2, 1, 1, (4,), rng=0)
    with pytest.raises(DimMismatch):
        net(np.zeros(2), np.zeros(2))
    with pytest.raises(DimMismatch):
        ConditionedNet("hidden", 2, 1, 1)
    cg = CGateNet(2, 1, 1, 4, 4)
    with pytest.raises(DimMismatch):
        cg(np.zeros((3, 2)), np.zeros((2, 1)))
    with pytest.raises(DimMismatch):
        MLP([2, 1])(np.zeros(3))


def test_stale_cache_rejected():
    net = MLP([2, 3, 1], rng=0)
    _, cache = net.forward(np.ones(2))
    net.weights[0] += 0.1
    net.mark_updated()
    with pytest.raises(StaleCache):
        net.backward(cache, np.ones(1))
    other = MLP([2, 3, 1], rng=0)
    _, cache = net.forward(np.ones(2))
    with pytest.raises(StaleCache):
        other.backward(cache, np.ones(1))


def test_forward_backward_deterministic():
    net = CGateNet(3, 2, 2, 4, 4, rng=7)
    s, c = np.arange(3.0), np.arange(2.0)
    a, ca = net.forward(s, c)
    b, cb = net.forward(s, c)
    assert a.tobytes() == b.tobytes()
    ga, _ = net.backward(ca, np.ones(2))
    gb, _ = net.backward(cb, np.ones(2))
    assert all(x.tobytes() == y.tobytes() for x, y in zip(ga, gb))


def test_save_load_round_trip(tmp_path):
    for mode, ctx in (("cgate", 2), ("concat_all", 5), ("hidden", 0)):
        net = ConditionedNet(mode, 3, ctx, 2, (8, 8), 4, output_activation="tanh", rng=11)
        path = tmp_path / f"{mode}.bin"
        save_params(net, path)
        back = load_params(path)
        assert back.descriptor() == net.descriptor()
        assert all(np.array_equal(a, b) for a, b in zip(net.params(), back.params()))
        s, c = np.ones((2, 3)), np.ones((2, ctx))
        assert np.array_equal(net(s, c), back(s, c))


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"nope\n")
    with pytest.raises(ValueError):
        load_params(p)


def test_copy_and_polyak():
    a = ConditionedNet("cgate", 2, 1, 1, (4, 4), 4, rng=1)
    b = ConditionedNet("cgate", 2, 1, 1, (4, 4), 4, rng=2)
    before = [p.copy() for p in b.params()]
    polyak_update(a, b, 0.25)
    for pa, pb, p0 in zip(a.params(), b.params(), before):
        assert np.allclose(pb, 0.25 * pa + 0.75 * p0)
    polyak_update(a, b, 1.0)
    assert all(np.array_equal(x, y) for x, y in zip(a.params(), b.params()))
    c = ConditionedNet("cgate", 2, 1, 1, (4, 4), 4, rng=3)
    copy_params(a, c)
    assert all(np.array_equal(x, y) for x, y in zip(a.params(), c.params()))
    clone = a.copy()
    clone.params()[0] += 1.0
    assert not np.array_equal(clone.params()[0], a.params()[0])
