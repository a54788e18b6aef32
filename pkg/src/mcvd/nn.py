"""
Small dense networks with a hand-written backward pass.

Everything runs in float64 on numpy arrays. A network accepts either a single
input vector of shape ``(in,)`` or a batch of shape ``(batch, in)``; the output
has the matching rank.
"""

import numpy as np

from .errors import ConfigError

ACTIVATIONS = ("relu", "identity", "abs")


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "abs":
        return np.abs(z)
    return z


def _activation_grad(z, kind):
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "abs":
        return np.sign(z)
    return np.ones_like(z)


class Layer:
    """One affine map followed by an elementwise activation."""

    def __init__(self, weight, bias, activation="identity"):
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.weight = np.array(weight, dtype=np.float64, ndmin=2)
        self.bias = np.array(bias, dtype=np.float64, ndmin=1)
        if self.bias.shape != (self.weight.shape[0],):
            raise ConfigError(
                f"bias shape {self.bias.shape} does not match weight rows {self.weight.shape[0]}"
            )
        self.activation = activation
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._input = None
        self._pre = None

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


class DenseNet:
    """
    Feedforward network built from :class:`Layer` objects.

    Intermediate values from the most recent :meth:`forward` call are cached
    so that :meth:`backward` can accumulate parameter gradients.
    """

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ConfigError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ConfigError(
                    f"layer shapes do not chain: {prev.out_dim} outputs feed {nxt.in_dim} inputs"
                )
        self.layers = layers
        self._squeeze = False
        # parameters and gradients live in two flat buffers; layer arrays are views into them
        total = sum(l.weight.size + l.bias.size for l in layers)
        self.flat_params = np.zeros(total)
        self.flat_grads = np.zeros(total)
        offset = 0
        for layer in layers:
            for name in ("weight", "bias"):
                arr = getattr(layer, name)
                view = self.flat_params[offset:offset + arr.size].reshape(arr.shape)
                view[...] = arr
                setattr(layer, name, view)
                setattr(layer, "grad_" + name, self.flat_grads[offset:offset + arr.size].reshape(arr.shape))
                offset += arr.size

    @classmethod
    def build(cls, sizes, rng, hidden_activation="relu", output_activation="identity", random_bias=False):
        """
        Create a network with the given layer widths ``[in, h1, ..., out]``.

        Weights are drawn uniformly from ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``.
        Biases start at zero unless ``random_bias`` asks for the same uniform draw.
        """
        if len(sizes) < 2:
            raise ConfigError("sizes must list at least an input and an output width")
        layers = []
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            b = rng.uniform(-bound, bound, size=fan_out) if random_bias else np.zeros(fan_out)
            act = output_activation if k == len(sizes) - 2 else hidden_activation
            layers.append(Layer(w, b, act))
        return cls(layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def gradients(self):
        out = []
        for layer in self.layers:
            out.extend((layer.grad_weight, layer.grad_bias))
        return out

    def zero_grad(self):
        self.flat_grads[...] = 0.0

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        self._squeeze = x.ndim == 1
        if self._squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ConfigError(f"expected input width {self.in_dim}, got shape {np.shape(x)}")
        for layer in self.layers:
            layer._input = x
            z = x @ layer.weight.T + layer.bias
            layer._pre = z
            x = _activate(z, layer.activation)
        return x[0] if self._squeeze else x

    def backward(self, upstream):
        """Accumulate parameter gradients and return the gradient wrt the input."""
        if self.layers[0]._input is None:
            raise RuntimeError("backward called before forward")
        g = np.asarray(upstream, dtype=np.float64)
        if self._squeeze:
            g = g[None, :]
        for layer in reversed(self.layers):
            if layer.activation != "identity":
                g = g * _activation_grad(layer._pre, layer.activation)
            layer.grad_weight += g.T @ layer._input
            layer.grad_bias += g.sum(axis=0)
            g = g @ layer.weight
        return g[0] if self._squeeze else g

    def predict(self, x):
        """Forward pass that leaves the backward cache untouched."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.in_dim:
            raise ConfigError(f"expected input width {self.in_dim}, got shape {np.shape(x)}")
        for layer in self.layers:
            x = _activate(x @ layer.weight.T + layer.bias, layer.activation)
        return x[0] if squeeze else x

    def copy_from(self, other):
        """Hard-copy every parameter of ``other`` into this network."""
        mine, theirs = self.parameters(), other.parameters()
        if len(mine) != len(theirs) or any(a.shape != b.shape for a, b in zip(mine, theirs)):
            raise ConfigError("cannot copy parameters between networks of different shape")
        self.flat_params[...] = other.flat_params

    def clone(self):
        return DenseNet(
            Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers
        )


def relu_margin(net):
    """Smallest |pre-activation| feeding a relu or abs in the last forward pass."""
    margins = [np.abs(l._pre).min() for l in net.layers if l.activation in ("relu", "abs") and l._pre is not None]
    return float(min(margins)) if margins else np.inf


def dense_forward(net, x):
    return net.forward(x)


def dense_backward(net, upstream):
    return net.backward(upstream)


class RMSProp:
    """
    RMSProp over every parameter of a group of networks.

    Update rule per parameter: ``s = decay*s + (1-decay)*g**2`` followed by
    ``p -= lr * g / (sqrt(s) + eps)``.
    """

    def __init__(self, nets, lr=5e-4, decay=0.99, eps=1e-5):
        self.nets = list(nets)
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.square_avg = [np.zeros_like(net.flat_params) for net in self.nets]

    def step(self, lr=None):
        lr = self.lr if lr is None else lr
        for net, s in zip(self.nets, self.square_avg):
            g = net.flat_grads
            s *= self.decay
            s += (1.0 - self.decay) * g * g
            net.flat_params -= lr * g / (np.sqrt(s) + self.eps)


def rmsprop_step(net, state, lr):
    state.step(lr)


def global_grad_norm(nets):
    return float(np.sqrt(sum(float(net.flat_grads @ net.flat_grads) for net in nets)))


def clip_grad_norm(nets, max_norm):
    """
    Rescale all gradients of ``nets`` so that their joint L2 norm is at most
    ``max_norm``. Returns the scale factor that was applied.
    """
    if max_norm <= 0:
        raise ConfigError("max_norm must be positive", key="grad_norm_clip")
    norm = global_grad_norm(nets)
    if norm <= max_norm:
        return 1.0
    scale = max_norm / norm
    for net in nets:
        net.flat_grads *= scale
    return scale


def numerical_gradient(params, loss_fn, h=1e-4):
    """
    Central-difference gradient of ``loss_fn()`` with respect to every entry of
    every array in ``params``. The arrays are perturbed in place and restored.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = loss_fn()
            flat[i] = orig - h
            minus = loss_fn()
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric):
    """max |a - n| / max(1, |n|) over all paired entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        err = np.abs(a - n) / np.maximum(1.0, np.abs(n))
        if err.size:
            worst = max(worst, float(err.max()))
    return worst


def finite_diff_check(net, x, scalar_loss, h=1e-4):
    """
    Compare the analytic parameter gradient of ``scalar_loss(net(x))`` with
    central differences.

    ``scalar_loss`` maps the network output to ``(value, d value / d output)``.
    """
    net.zero_grad()
    out = net.forward(x)
    _, upstream = scalar_loss(out)
    net.backward(upstream)
    analytic = [g.copy() for g in net.gradients()]
    numeric = numerical_gradient(net.parameters(), lambda: scalar_loss(net.predict(x))[0], h=h)
    return max_relative_error(analytic, numeric)
