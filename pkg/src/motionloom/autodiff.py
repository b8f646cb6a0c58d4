"""Dense-tensor reverse-mode autodiff engine and Adam optimizer.

Tensors wrap numpy arrays (float64 by default, float32 selectable for
training throughput). Each op records a backward closure; `backward()` on a
scalar loss walks the tape in reverse topological order and accumulates
gradients into every reachable parameter.
"""

import json
import struct

import numpy as np
from scipy.special import erf

MAGIC = b"MLWT"
FORMAT_VERSION = 1


class DimensionError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=dtype if dtype is not None else None)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={'yes' if self.requires_grad else 'no'})"

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data.copy())

    # -- graph plumbing ----------------------------------------------------

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise DimensionError(f"backward requires a scalar loss, got shape {self.shape}")
        topo, seen = [], set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)

        visit(self)
        self._accumulate(np.ones_like(self.data))
        for t in reversed(topo):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, _lift(other, self.dtype))

    def __radd__(self, other):
        return add(_lift(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _lift(other, self.dtype))

    def __rmul__(self, other):
        return mul(_lift(other, self.dtype), self)

    def __sub__(self, other):
        return add(self, neg(_lift(other, self.dtype)))

    def __rsub__(self, other):
        return add(_lift(other, self.dtype), neg(self))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def _lift(x, dtype):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=dtype))


def _node(data, parents, backward):
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = False
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back to `shape`."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- primitive ops ---------------------------------------------------------


def add(a, b):
    a, b = _lift(a, None), _lift(b, None)

    def bwd(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), bwd)


def neg(a):
    def bwd(g):
        a._accumulate(-g)

    return _node(-a.data, (a,), bwd)


def mul(a, b):
    a, b = _lift(a, None), _lift(b, None)

    def bwd(g):
        a._accumulate(_unbroadcast(g * b.data, a.shape))
        b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), bwd)


def matmul(a, b):
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise DimensionError("matmul operands must have >= 2 dims")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def bwd(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        a._accumulate(ga if ga.shape == a.shape else _unbroadcast(ga, a.shape))
        b._accumulate(gb if gb.shape == b.shape else _unbroadcast(gb, b.shape))

    return _node(a.data @ b.data, (a, b), bwd)


def transpose(a):
    """Swap the last two axes."""
    if a.data.ndim < 2:
        raise DimensionError("transpose needs >= 2 dims")

    def bwd(g):
        a._accumulate(np.swapaxes(g, -1, -2))

    return _node(np.swapaxes(a.data, -1, -2), (a,), bwd)


def permute(a, axes):
    axes = tuple(axes)
    inverse = np.argsort(axes)

    def bwd(g):
        a._accumulate(np.transpose(g, inverse))

    return _node(np.transpose(a.data, axes), (a,), bwd)


def reshape(a, shape):
    old = a.shape

    def bwd(g):
        a._accumulate(g.reshape(old))

    return _node(a.data.reshape(shape), (a,), bwd)


def concat_rows(tensors):
    """Concatenate along the first axis."""
    sizes = [t.shape[0] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            t._accumulate(g[lo:hi])

    return _node(np.concatenate([t.data for t in tensors], axis=0), tuple(tensors), bwd)


def take_rows(a, start, length):
    """Slice `length` rows of the first axis starting at `start`."""
    if start < 0 or start + length > a.shape[0]:
        raise DimensionError(f"take_rows [{start}:{start + length}] out of bounds for {a.shape}")

    def bwd(g):
        full = np.zeros_like(a.data)
        full[start : start + length] = g
        a._accumulate(full)

    return _node(a.data[start : start + length].copy(), (a,), bwd)


def softmax(a):
    """Softmax over the last axis."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        dot = (g * s).sum(axis=-1, keepdims=True)
        a._accumulate(s * (g - dot))

    return _node(s, (a,), bwd)


def layer_norm(a, scale, shift, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine."""
    mu = a.data.mean(axis=-1, keepdims=True)
    var = a.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv

    def bwd(g):
        n = a.data.shape[-1]
        gx = g * scale.data
        term = gx - gx.mean(axis=-1, keepdims=True) - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
        a._accumulate(term * inv)
        scale._accumulate(_unbroadcast(g * xhat, scale.shape))
        shift._accumulate(_unbroadcast(g, shift.shape))

    return _node(xhat * scale.data + shift.data, (a, scale, shift), bwd)


def gelu(a):
    """Exact GELU: x * Phi(x)."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)

    def bwd(g):
        a._accumulate(g * (cdf + x * pdf))

    return _node(x * cdf, (a,), bwd)


def relu(a):
    mask = a.data > 0

    def bwd(g):
        a._accumulate(g * mask)

    return _node(a.data * mask, (a,), bwd)


def linear(x, weight, bias=None):
    """x @ weight (+ bias broadcast over leading axes)."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def masked_fill(a, mask, value):
    """Set entries where `mask` is true to `value`; their gradient is cut."""
    mask = np.asarray(mask, dtype=bool)
    filled = np.where(mask, value, a.data)

    def bwd(g):
        a._accumulate(np.where(mask, 0.0, g))

    return _node(filled, (a,), bwd)


def tsum(a):
    def bwd(g):
        a._accumulate(np.full_like(a.data, float(g)))

    return _node(a.data.sum(), (a,), bwd)


def tmean(a):
    n = a.data.size

    def bwd(g):
        a._accumulate(np.full_like(a.data, float(g) / n))

    return _node(a.data.mean(), (a,), bwd)


def tdiv(a, b):
    a, b = _lift(a, None), _lift(b, None)

    def bwd(g):
        a._accumulate(_unbroadcast(g / b.data, a.shape))
        b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _node(a.data / b.data, (a, b), bwd)


def tsin(a):
    def bwd(g):
        a._accumulate(g * np.cos(a.data))

    return _node(np.sin(a.data), (a,), bwd)


def tcos(a):
    def bwd(g):
        a._accumulate(-g * np.sin(a.data))

    return _node(np.cos(a.data), (a,), bwd)


def tsqrt(a):
    root = np.sqrt(a.data)

    def bwd(g):
        a._accumulate(g * 0.5 / root)

    return _node(root, (a,), bwd)


def square(a):
    return mul(a, a)


def rodrigues(v, eps=1e-12):
    """Batched exponential map: axis-angle vectors (..., 3) -> rotation
    matrices (..., 3, 3) via R = I + a K + b K^2 with a = sin(t)/t,
    b = (1 - cos(t))/t^2, t = |v| (eps-guarded so the t=0 gradient is exact)."""
    x = v.data
    theta2 = (x * x).sum(axis=-1) + eps
    theta = np.sqrt(theta2)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta2
    k = np.zeros(x.shape[:-1] + (3, 3), dtype=x.dtype)
    k[..., 0, 1], k[..., 0, 2] = -x[..., 2], x[..., 1]
    k[..., 1, 0], k[..., 1, 2] = x[..., 2], -x[..., 0]
    k[..., 2, 0], k[..., 2, 1] = -x[..., 1], x[..., 0]
    k2 = k @ k
    eye = np.broadcast_to(np.eye(3, dtype=x.dtype), k.shape)
    out = eye + a[..., None, None] * k + b[..., None, None] * k2

    def bwd(g):
        da = (g * k).sum(axis=(-1, -2))
        db = (g * k2).sum(axis=(-1, -2))
        kt = np.swapaxes(k, -1, -2)
        dk = a[..., None, None] * g + b[..., None, None] * (g @ kt + kt @ g)
        gv = np.empty_like(x)
        gv[..., 0] = dk[..., 2, 1] - dk[..., 1, 2]
        gv[..., 1] = dk[..., 0, 2] - dk[..., 2, 0]
        gv[..., 2] = dk[..., 1, 0] - dk[..., 0, 1]
        da_dt = (np.cos(theta) * theta - np.sin(theta)) / theta2
        db_dt = (np.sin(theta) * theta - 2.0 * (1.0 - np.cos(theta))) / (theta2 * theta)
        gv += ((da * da_dt + db * db_dt) / theta)[..., None] * x
        v._accumulate(gv)

    return _node(out, (v,), bwd)


def mse(pred, target):
    """Mean squared error against a constant target."""
    if isinstance(target, Tensor):
        target = target.data
    diff = add(pred, Tensor(-np.asarray(target, dtype=pred.dtype)))
    return tmean(square(diff))


# -- parameters and optimizer ---------------------------------------------


def parameter(data, dtype=np.float64):
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=True)


def glorot(rng, fan_in, fan_out, shape=None, dtype=np.float64):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return parameter(rng.uniform(-limit, limit, size=shape or (fan_in, fan_out)), dtype=dtype)


class Adam:
    """Standard Adam with bias correction; zeroes grads after each step."""

    def __init__(self, params, lr=1e-5, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        for p in self.params:
            if p.grad is None:
                raise ValueError("adam_step called with unpopulated gradients")
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            mhat = self.m[i] / (1.0 - self.beta1**t)
            vhat = self.v[i] / (1.0 - self.beta2**t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
            p.grad = None

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def clip_grad_norm(params, max_norm):
    total = np.sqrt(sum(float((p.grad**2).sum()) for p in params if p.grad is not None))
    if total > max_norm > 0:
        scale = max_norm / total
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return total


# -- weight file IO --------------------------------------------------------


def save_weights(path, tensors, hyperparams=None):
    """Binary weight file: magic, version u32, u32 header length, JSON header,
    then raw little-endian payloads in header order. Bit-exact round trip."""
    names = list(tensors)
    header = {
        "hyperparams": hyperparams or {},
        "tensors": [
            {
                "name": n,
                "shape": list(tensors[n].data.shape),
                "dtype": str(tensors[n].data.dtype),
            }
            for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for n in names:
            arr = np.ascontiguousarray(tensors[n].data)
            if arr.dtype.byteorder == ">":
                arr = arr.astype(arr.dtype.newbyteorder("<"))
            f.write(arr.tobytes())


def load_weights(path):
    """Returns (ordered dict name -> Tensor parameter, hyperparams dict)."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path}: not a weight file (bad magic)")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported weight format version {version}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        out = {}
        for entry in header["tensors"]:
            dtype = np.dtype(entry["dtype"])
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            data = np.frombuffer(f.read(count * dtype.itemsize), dtype=dtype).reshape(entry["shape"])
            out[entry["name"]] = parameter(data.copy(), dtype=dtype)
    return out, header["hyperparams"]
