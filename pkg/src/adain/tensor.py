"""Dense tensors with reverse-mode automatic differentiation.

Covers exactly the operations the style-transfer networks and their
losses need: elementwise arithmetic with broadcasting, axis reductions,
convolution, reflection padding, nearest upsampling, max pooling, relu,
and an L2 norm. Feature maps are rank-4 (N, C, H, W); parameters may be
lower rank. Element type is float32 by default; pass ``dtype=np.float64``
for the gradient-check mode.
"""

import numpy as np

from . import backend
from .errors import ContractError, DimensionError

_FLOAT_TYPES = (np.float32, np.float64)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_TYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward_fn = None

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _result(data, parents, backward_fn):
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward_fn = backward_fn
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward_fn = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        """Same data, severed from the graph."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # -- reverse-mode accumulation -------------------------------------------

    def backward(self):
        """Populate ``grad`` on every reachable tensor that requires grad.

        The loss must be a scalar (size-1 tensor). Repeated calls without
        ``zero_grad`` accumulate.
        """
        if self.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {self.data.shape}")
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        flow = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = flow.pop(id(node), None)
            if g is None:
                continue
            node.grad = g if node.grad is None else node.grad + g
            if node._backward_fn is None:
                continue
            for parent, pg in node._backward_fn(g):
                if not parent.requires_grad:
                    continue
                held = flow.get(id(parent))
                flow[id(parent)] = pg if held is None else held + pg

    # -- operator sugar --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        return add(self, self._coerce(other))

    def __radd__(self, other):
        return add(self._coerce(other), self)

    def __sub__(self, other):
        return sub(self, self._coerce(other))

    def __rsub__(self, other):
        return sub(self._coerce(other), self)

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    def __rmul__(self, other):
        return mul(self._coerce(other), self)

    def __truediv__(self, other):
        return div(self, self._coerce(other))

    def __neg__(self):
        return mul(self, self._coerce(-1.0))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back to ``shape``."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise -----------------------------------------------------------


def add(a, b):
    def backward_fn(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(g, b.data.shape))]

    return Tensor._result(a.data + b.data, (a, b), backward_fn)


def sub(a, b):
    def backward_fn(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(-g, b.data.shape))]

    return Tensor._result(a.data - b.data, (a, b), backward_fn)


def mul(a, b):
    def backward_fn(g):
        return [
            (a, _unbroadcast(g * b.data, a.data.shape)),
            (b, _unbroadcast(g * a.data, b.data.shape)),
        ]

    return Tensor._result(a.data * b.data, (a, b), backward_fn)


def div(a, b):
    def backward_fn(g):
        return [
            (a, _unbroadcast(g / b.data, a.data.shape)),
            (b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)),
        ]

    return Tensor._result(a.data / b.data, (a, b), backward_fn)


def sqrt(a):
    out_data = np.sqrt(a.data)

    def backward_fn(g):
        return [(a, g * (0.5 / out_data))]

    return Tensor._result(out_data, (a,), backward_fn)


def relu(a):
    """max(0, x); gradient is 0 at x == 0 by convention."""
    mask = a.data > 0

    def backward_fn(g):
        return [(a, g * mask)]

    return Tensor._result(np.maximum(a.data, 0), (a,), backward_fn)


# -- reductions and shape ----------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        gg = g
        if not keepdims and axis is not None:
            gg = np.expand_dims(gg, axis)
        return [(a, np.broadcast_to(gg, a.data.shape).copy())]

    return Tensor._result(np.asarray(out_data), (a,), backward_fn)


def tmean(a, axis=None, keepdims=False):
    out_data = a.data.mean(axis=axis, keepdims=keepdims)
    if axis is None:
        count = a.data.size
    else:
        ax = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for i in ax:
            count *= a.data.shape[i]

    def backward_fn(g):
        gg = g
        if not keepdims and axis is not None:
            gg = np.expand_dims(gg, axis)
        scaled = gg / np.asarray(count, dtype=a.data.dtype)
        return [(a, np.broadcast_to(scaled, a.data.shape).copy())]

    return Tensor._result(np.asarray(out_data), (a,), backward_fn)


def reshape(a, shape):
    orig = a.data.shape

    def backward_fn(g):
        return [(a, g.reshape(orig))]

    return Tensor._result(a.data.reshape(shape), (a,), backward_fn)


def concat(tensors, axis=1):
    """Concatenate along an axis (channel-wise fusion uses axis=1)."""
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        pieces = np.split(g, splits, axis=axis)
        return list(zip(tensors, pieces))

    return Tensor._result(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward_fn)


def l2_norm(a, axis, keepdims=False):
    """Euclidean norm over ``axis`` with subgradient 0 at the origin."""
    norm = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=True))
    safe = np.where(norm == 0, np.asarray(1, dtype=a.data.dtype), norm)
    out_data = norm if keepdims else norm.squeeze(axis=axis)

    def backward_fn(g):
        gg = g if keepdims else np.expand_dims(g, axis)
        return [(a, gg * (a.data / safe))]

    return Tensor._result(out_data, (a,), backward_fn)


# -- spatial ops -------------------------------------------------------------


def conv2d(x, weight, bias=None, stride=1):
    """Valid cross-correlation of (N,Cin,H,W) with (Cout,Cin,kH,kW).

    No implicit padding; pair with reflection_pad2d. Differentiable in
    x, weight, and bias.
    """
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise DimensionError("conv2d expects rank-4 input and weight")
    n, cin, h, w = x.data.shape
    cout, wcin, kh, kw = weight.data.shape
    if cin != wcin:
        raise DimensionError(f"conv2d channel mismatch: input {cin}, weight {wcin}")
    if kh > h or kw > w:
        raise DimensionError(f"kernel {kh}x{kw} exceeds input {h}x{w}")
    if stride < 1:
        raise DimensionError(f"stride must be >= 1, got {stride}")
    if bias is not None and bias.data.shape != (cout,):
        raise DimensionError(f"bias must have shape ({cout},), got {bias.data.shape}")

    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    cols = backend.im2col(np.ascontiguousarray(x.data), kh, kw, stride)  # (N, Cin*kH*kW, Ho*Wo)
    wmat = weight.data.reshape(cout, -1)
    out = np.matmul(wmat, cols)  # (N, Cout, Ho*Wo)
    if bias is not None:
        out = out + bias.data.reshape(1, -1, 1)
    out = out.reshape(n, cout, ho, wo)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward_fn(g):
        gm = g.reshape(n, cout, -1)
        grads = []
        if x.requires_grad:
            dcols = np.matmul(wmat.T, gm)
            grads.append((x, backend.col2im(np.ascontiguousarray(dcols), h, w, kh, kw, stride)))
        if weight.requires_grad:
            dw = np.tensordot(gm, cols, axes=([0, 2], [0, 2]))
            grads.append((weight, dw.reshape(weight.data.shape)))
        if bias is not None and bias.requires_grad:
            grads.append((bias, gm.sum(axis=(0, 2))))
        return grads

    return Tensor._result(out, parents, backward_fn)


def reflection_pad2d(x, pad):
    """Mirror-pad H and W by ``pad`` without repeating the edge pixel.

    Size-1 axes degenerate to repetition; otherwise pad must be smaller
    than the axis length.
    """
    if x.data.ndim != 4:
        raise DimensionError("reflection_pad2d expects rank-4 input")
    h, w = x.data.shape[2:]
    for dim in (h, w):
        if dim > 1 and pad >= dim:
            raise DimensionError(f"padding {pad} must be smaller than spatial dim {dim}")
    if pad < 0:
        raise DimensionError(f"padding must be >= 0, got {pad}")
    if pad == 0:
        return x
    out = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)), mode="reflect")

    def backward_fn(g):
        return [(x, backend.reflect_pad_backward(np.ascontiguousarray(g), pad))]

    return Tensor._result(out, (x,), backward_fn)


def upsample_nearest2d(x, factor):
    """Nearest-neighbor upsample by an integer factor."""
    if x.data.ndim != 4:
        raise DimensionError("upsample_nearest2d expects rank-4 input")
    if factor < 1:
        raise DimensionError(f"factor must be >= 1, got {factor}")
    if factor == 1:
        return x
    n, c, h, w = x.data.shape
    out = np.repeat(np.repeat(x.data, factor, axis=2), factor, axis=3)

    def backward_fn(g):
        return [(x, g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)))]

    return Tensor._result(out, (x,), backward_fn)


def max_pool2d(x, k, stride=None):
    """Windowed max; gradient routes to the first max in scan order."""
    if x.data.ndim != 4:
        raise DimensionError("max_pool2d expects rank-4 input")
    stride = k if stride is None else stride
    n, c, h, w = x.data.shape
    if k > h or k > w:
        raise DimensionError(f"pool window {k} exceeds input {h}x{w}")
    out, arg = backend.maxpool_forward(np.ascontiguousarray(x.data), k, stride)

    def backward_fn(g):
        return [(x, backend.maxpool_backward(np.ascontiguousarray(g), arg, h, w))]

    return Tensor._result(out, (x,), backward_fn)
