"""Small feedforward networks with hand-written backward passes.

Three building blocks:

* :class:`MLP` - dense layers with relu/tanh hidden units,
* :class:`CGateNet` - ``f(phi(state) * g(context))``, the state features
  gated elementwise by a learned context embedding,
* :class:`ConditionedNet` - one of the four ways of feeding context to a
  network (hidden, concat_all, concat_changing, cgate) behind a single
  ``forward(state, context)`` interface.

Inputs are 1-D vectors or 2-D ``(batch, features)`` arrays. ``backward``
returns the parameter gradients (same order as ``params()``) and the gradients
w.r.t. the inputs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .context import VisibilityMode
from .errors import DimMismatch, StaleCache

_ACTIVATIONS = ("linear", "relu", "tanh")


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if name == "relu":
        return grad * (z > 0)
    if name == "tanh":
        return grad * (1.0 - a * a)
    return grad


def _as_batch(x, width: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    x = x.astype(np.result_type(x.dtype, np.float64), copy=False)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != width:
        raise DimMismatch(f"{what}: expected width {width}, got shape {x.shape}")
    return x, single


@dataclass
class _Cache:
    owner: int
    version: int
    data: tuple
    single: bool


class _Versioned:
    def __init__(self) -> None:
        self._version = 0

    def mark_updated(self) -> None:
        self._version += 1

    def _check(self, cache: _Cache) -> None:
        if cache.owner != id(self) or cache.version != self._version:
            raise StaleCache("cache does not belong to the current parameters of this network")


class MLP(_Versioned):
    def __init__(
        self,
        layer_sizes: Sequence[int],
        hidden_activation: str = "relu",
        output_activation: str = "linear",
        rng: np.random.Generator | int | None = 0,
    ):
        super().__init__()
        if len(layer_sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        if hidden_activation not in _ACTIVATIONS or output_activation not in _ACTIVATIONS:
            raise ValueError(f"activations must be one of {_ACTIVATIONS}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        rng = np.random.default_rng(rng)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(max(fan_in, 1))
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def _activation(self, layer: int) -> str:
        last = layer == len(self.weights) - 1
        return self.output_activation if last else self.hidden_activation

    def forward(self, x) -> tuple[np.ndarray, _Cache]:
        x, single = _as_batch(x, self.in_dim, "MLP input")
        acts = [x]
        pre = []
        a = x
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = _act(self._activation(i), z)
            pre.append(z)
            acts.append(a)
        out = a[0] if single else a
        return out, _Cache(id(self), self._version, (acts, pre), single)

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: _Cache, grad_out) -> tuple[list[np.ndarray], np.ndarray]:
        self._check(cache)
        acts, pre = cache.data
        g, _ = _as_batch(grad_out, self.out_dim, "MLP output gradient")
        if g.shape[0] != acts[0].shape[0]:
            raise DimMismatch("output gradient batch size differs from the forward batch")
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        for i in range(len(self.weights) - 1, -1, -1):
            g = _act_grad(self._activation(i), pre[i], acts[i + 1], g)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, (g[0] if cache.single else g)

    def descriptor(self) -> dict:
        return {
            "type": "MLP",
            "layer_sizes": self.layer_sizes,
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
        }


class CGateNet(_Versioned):
    """``f(phi(state) * g(context))`` with single-hidden-layer branches."""

    def __init__(
        self,
        state_dim: int,
        context_dim: int,
        out_dim: int,
        embed_dim: int = 64,
        hidden: int = 64,
        context_hidden: int | None = None,
        output_activation: str = "linear",
        rng: np.random.Generator | int | None = 0,
    ):
        super().__init__()
        rng = np.random.default_rng(rng)
        context_hidden = hidden if context_hidden is None else context_hidden
        self.state_branch = MLP([state_dim, hidden, embed_dim], "relu", "linear", rng)
        self.context_branch = MLP([context_dim, context_hidden, embed_dim], "relu", "linear", rng)
        self.head = MLP([embed_dim, hidden, out_dim], "relu", output_activation, rng)
        self._config = dict(
            state_dim=state_dim,
            context_dim=context_dim,
            out_dim=out_dim,
            embed_dim=embed_dim,
            hidden=hidden,
            context_hidden=context_hidden,
            output_activation=output_activation,
        )

    @property
    def parts(self) -> tuple[MLP, MLP, MLP]:
        return self.state_branch, self.context_branch, self.head

    def params(self) -> list[np.ndarray]:
        return [p for part in self.parts for p in part.params()]

    def mark_updated(self) -> None:
        super().mark_updated()
        for part in self.parts:
            part.mark_updated()

    def forward(self, state, context) -> tuple[np.ndarray, _Cache]:
        s, single = _as_batch(state, self.state_branch.in_dim, "cGate state")
        c, _ = _as_batch(context, self.context_branch.in_dim, "cGate context")
        if c.shape[0] != s.shape[0]:
            raise DimMismatch("state and context batch sizes differ")
        phi, phi_cache = self.state_branch.forward(s)
        gate, gate_cache = self.context_branch.forward(c)
        out, head_cache = self.head.forward(phi * gate)
        data = (phi, gate, phi_cache, gate_cache, head_cache)
        return (out[0] if single else out), _Cache(id(self), self._version, data, single)

    def __call__(self, state, context) -> np.ndarray:
        return self.forward(state, context)[0]

    def backward(self, cache: _Cache, grad_out):
        self._check(cache)
        phi, gate, phi_cache, gate_cache, head_cache = cache.data
        g, _ = _as_batch(grad_out, self.head.out_dim, "cGate output gradient")
        head_grads, g_mod = self.head.backward(head_cache, g)
        phi_grads, g_state = self.state_branch.backward(phi_cache, g_mod * gate)
        gate_grads, g_ctx = self.context_branch.backward(gate_cache, g_mod * phi)
        if cache.single:
            g_state, g_ctx = g_state[0], g_ctx[0]
        return phi_grads + gate_grads + head_grads, (g_state, g_ctx)

    def descriptor(self) -> dict:
        return {"type": "CGateNet", **self._config}


class ConditionedNet(_Versioned):
    """A network that receives the context according to a visibility mode.

    ``hidden`` ignores the context (its context input must be empty), the
    concat modes feed ``[state, context]`` to one MLP and ``cgate`` routes the
    context through the gating branch.
    """

    def __init__(
        self,
        mode: VisibilityMode | str,
        state_dim: int,
        context_dim: int,
        out_dim: int,
        hidden: Sequence[int] = (64, 64),
        embed_dim: int = 64,
        context_hidden: int | None = None,
        output_activation: str = "linear",
        rng: np.random.Generator | int | None = 0,
    ):
        super().__init__()
        self.mode = VisibilityMode(mode)
        if self.mode is VisibilityMode.HIDDEN and context_dim != 0:
            raise DimMismatch("hidden mode takes no context input")
        self.state_dim, self.context_dim, self.out_dim = state_dim, context_dim, out_dim
        self._config = dict(
            mode=self.mode.value,
            state_dim=state_dim,
            context_dim=context_dim,
            out_dim=out_dim,
            hidden=list(hidden),
            embed_dim=embed_dim,
            context_hidden=context_hidden,
            output_activation=output_activation,
        )
        # an empty context part degrades every mode to the plain state network
        self.gated = self.mode is VisibilityMode.CGATE and context_dim > 0
        if self.gated:
            self.net: MLP | CGateNet = CGateNet(
                state_dim, context_dim, out_dim, embed_dim, hidden[0], context_hidden,
                output_activation, rng,
            )
        else:
            self.net = MLP([state_dim + context_dim, *hidden, out_dim], "relu", output_activation, rng)

    def params(self) -> list[np.ndarray]:
        return self.net.params()

    def mark_updated(self) -> None:
        super().mark_updated()
        self.net.mark_updated()

    def forward(self, state, context=None) -> tuple[np.ndarray, _Cache]:
        s = np.asarray(state)
        s = s.astype(np.result_type(s.dtype, np.float64), copy=False)
        single = s.ndim == 1
        if context is None:
            context = np.zeros(s.shape[:-1] + (0,), dtype=s.dtype)
        c = np.asarray(context)
        c = c.astype(np.result_type(c.dtype, np.float64), copy=False)
        if s.shape[-1] != self.state_dim or c.shape[-1] != self.context_dim:
            raise DimMismatch(
                f"expected state/context widths {self.state_dim}/{self.context_dim}, "
                f"got {s.shape[-1]}/{c.shape[-1]}"
            )
        if self.gated:
            out, inner = self.net.forward(s, c)
        else:
            out, inner = self.net.forward(np.concatenate([s, c], axis=-1))
        return out, _Cache(id(self), self._version, (inner,), single)

    def __call__(self, state, context=None) -> np.ndarray:
        return self.forward(state, context)[0]

    def backward(self, cache: _Cache, grad_out):
        self._check(cache)
        (inner,) = cache.data
        if self.gated:
            return self.net.backward(inner, grad_out)
        grads, g_in = self.net.backward(inner, grad_out)
        return grads, (g_in[..., : self.state_dim], g_in[..., self.state_dim :])

    def descriptor(self) -> dict:
        return {"type": "ConditionedNet", **self._config}

    def copy(self) -> "ConditionedNet":
        clone = build_from_descriptor(self.descriptor())
        copy_params(self, clone)
        return clone


def copy_params(src, dst) -> None:
    for a, b in zip(src.params(), dst.params(), strict=True):
        b[...] = a
    dst.mark_updated()


def polyak_update(src, dst, tau: float) -> None:
    """``dst <- tau * src + (1 - tau) * dst`` in place."""
    for a, b in zip(src.params(), dst.params(), strict=True):
        b *= 1.0 - tau
        b += tau * a
    dst.mark_updated()


def n_params(net) -> int:
    return int(sum(p.size for p in net.params()))


def build_from_descriptor(desc: dict):
    desc = dict(desc)
    kind = desc.pop("type")
    if kind == "MLP":
        return MLP(desc["layer_sizes"], desc["hidden_activation"], desc["output_activation"])
    if kind == "CGateNet":
        return CGateNet(**desc)
    if kind == "ConditionedNet":
        return ConditionedNet(**desc)
    raise ValueError(f"unknown network type {kind!r}")


_MAGIC = b"CARLNET1 "


def save_params(net, path: str | Path) -> None:
    """Text header with the architecture, then little-endian float64 parameters."""
    header = json.dumps(net.descriptor(), sort_keys=True).encode("utf-8")
    flat = np.concatenate([p.ravel() for p in net.params()]) if net.params() else np.empty(0)
    with open(path, "wb") as fh:
        fh.write(_MAGIC + header + b"\n")
        fh.write(struct.pack("<Q", flat.size))
        fh.write(flat.astype("<f8").tobytes())


def load_params(path: str | Path):
    with open(path, "rb") as fh:
        line = fh.readline()
        if not line.startswith(_MAGIC):
            raise ValueError(f"{path}: not a parameter file")
        net = build_from_descriptor(json.loads(line[len(_MAGIC) :].decode("utf-8")))
        (count,) = struct.unpack("<Q", fh.read(8))
        flat = np.frombuffer(fh.read(), dtype="<f8")
    if flat.size != count or count != n_params(net):
        raise ValueError(f"{path}: expected {n_params(net)} parameters, found {flat.size}")
    offset = 0
    for p in net.params():
        p[...] = flat[offset : offset + p.size].reshape(p.shape)
        offset += p.size
    net.mark_updated()
    return net


def _mlps(net) -> list[MLP]:
    if isinstance(net, MLP):
        return [net]
    if isinstance(net, CGateNet):
        return list(net.parts)
    return _mlps(net.net)


def _clone(net, dtype):
    """Copy of ``net`` whose parameters are stored as ``dtype``."""
    clone = build_from_descriptor(net.descriptor())
    for src, dst in zip(_mlps(net), _mlps(clone), strict=True):
        dst.weights = [w.astype(dtype) for w in src.weights]
        dst.biases = [b.astype(dtype) for b in src.biases]
    clone.mark_updated()
    return clone


def _input_grads(net, g_in) -> list[np.ndarray]:
    if isinstance(net, MLP):
        return [g_in]
    return list(g_in)


def gradient_check(
    net, inputs: Sequence, seed: int = 0, h: float = 1e-5, check_inputs: bool = True
) -> float:
    """Max relative error between backprop and central differences.

    The output is reduced to a scalar with a random projection. Relative error
    per entry is ``|a - n| / max(|a|, |n|, 1e-8)``. The finite differences are
    taken on an extended-precision copy of the network so that entries with
    gradients near the 1e-8 floor are not swamped by float64 roundoff.
    """
    rng = np.random.default_rng(seed)
    inputs = [np.array(x, dtype=np.float64) for x in inputs]
    out, cache = net.forward(*inputs)
    proj = rng.standard_normal(np.shape(out))
    grads, g_in = net.backward(cache, proj)

    ref = _clone(net, np.longdouble)
    ref_inputs = [x.astype(np.longdouble) for x in inputs]
    ref_proj = proj.astype(np.longdouble)

    def loss():
        ref.mark_updated()
        return np.sum(ref_proj * ref.forward(*ref_inputs)[0])

    worst = 0.0

    def compare(target: np.ndarray, analytic: np.ndarray) -> None:
        nonlocal worst
        flat = target.reshape(-1)
        ana = np.asarray(analytic).reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            plus = loss()
            flat[k] = orig - h
            minus = loss()
            flat[k] = orig
            numeric = float((plus - minus) / (2 * np.longdouble(h)))
            err = abs(ana[k] - numeric) / max(abs(ana[k]), abs(numeric), 1e-8)
            worst = max(worst, err)

    for p, g in zip(ref.params(), grads, strict=True):
        compare(p, g)
    if check_inputs:
        for x, g in zip(ref_inputs, _input_grads(net, g_in)):
            compare(x, g)
    return float(worst)


def random_gradcheck_nets(n: int = 20, seed: int = 0) -> list[tuple[str, object, list[np.ndarray]]]:
    """``n`` random small networks (alternating MLP and CGateNet) with inputs."""
    rng = np.random.default_rng(seed)
    acts = ("tanh", "relu", "linear")
    out = []
    for i in range(n):
        batch = int(rng.integers(1, 5))
        if i % 2 == 0:
            sizes = [int(v) for v in rng.integers(1, 7, size=int(rng.integers(2, 5)))]
            net = MLP(sizes, str(rng.choice(acts[:2])), str(rng.choice(acts)), rng)
            out.append((f"MLP{sizes}", net, [rng.standard_normal((batch, sizes[0]))]))
        else:
            s, c, o, d, hdim = (int(v) for v in rng.integers(1, 6, size=5))
            net = CGateNet(s, c, o, d, hdim, None, str(rng.choice(acts)), rng)
            inputs = [rng.standard_normal((batch, s)), rng.standard_normal((batch, c))]
            out.append((f"CGateNet(s={s},c={c},out={o},embed={d},hidden={hdim})", net, inputs))
    return out


def gradcheck_suite(n: int = 20, seed: int = 0, h: float = 1e-5) -> list[tuple[str, float]]:
    """Max relative gradient error for each of ``n`` random networks."""
    return [
        (name, gradient_check(net, inputs, seed=seed + k, h=h))
        for k, (name, net, inputs) in enumerate(random_gradcheck_nets(n, seed))
    ]
