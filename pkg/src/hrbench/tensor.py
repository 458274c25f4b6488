"""Dense float64 tensors with reverse-mode automatic differentiation.

Values are numpy arrays in row-major order. Every differentiable
operation appends the output node to a thread-local tape; `backward`
replays the tape in reverse, visiting each node exactly once and
accumulating gradients into `.grad` until they are explicitly zeroed.
Graphs are confined to the thread that built them; tensors outside a
graph (datasets, weight snapshots) are plain immutable payloads.

Broadcasting is deliberately restricted to trailing-dimension bias adds
so that every backward rule stays auditable.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from . import fft as _fft
from .errors import DimensionError, InputError

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class _GraphState(threading.local):
    def __init__(self):
        self.tape: list["Tensor"] = []
        self.recording = True
        self.last_audit: dict | None = None


_state = _GraphState()


class no_grad:
    """Context manager that suspends graph recording on this thread."""

    def __enter__(self):
        self._prev = _state.recording
        _state.recording = False
        return self

    def __exit__(self, *exc):
        _state.recording = self._prev
        return False


def reset_graph():
    """Discard any recorded but unconsumed graph on this thread."""
    _state.tape.clear()


def graph_size() -> int:
    return len(_state.tape)


def last_backward_audit() -> dict | None:
    """Visit statistics of the most recent backward pass on this thread."""
    return _state.last_audit


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward", "_visits")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        self._parents: tuple = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._visits = 0

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{label}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def item(self) -> float:
        if self.data.size != 1:
            raise InputError(f"item() on tensor of size {self.data.size}")
        return float(self.data.reshape(()))

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Tensor):
            return add(self, other)
        return shift(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Tensor):
            return sub(self, other)
        return shift(self, -float(other))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return slice_(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def backward(self):
        backward(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _track(out: Tensor, parents: tuple, rule: Callable[[np.ndarray], None]) -> Tensor:
    """Register `out` on the tape when any parent participates in the graph."""
    if _state.recording and any(p.requires_grad or p._backward is not None for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = rule
        _state.tape.append(out)
    return out


def backward(loss: Tensor):
    """Reverse sweep from `loss` over this thread's recorded tape.

    Consumes the tape. Leaf gradients accumulate across calls until
    `zero_grad`. Each recorded node's rule fires at most once.
    """
    if loss.data.size != 1:
        raise InputError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    tape = _state.tape
    if loss._backward is None and not tape:
        raise InputError("no recorded graph: forward ran under no_grad or produced a leaf")
    loss._accumulate(np.ones_like(loss.data))
    visited = 0
    max_visits = 0
    for node in reversed(tape):
        if node.grad is None or node._backward is None:
            continue
        node._visits += 1
        max_visits = max(max_visits, node._visits)
        visited += 1
        node._backward(node.grad)
        if node is not loss:
            node.grad = None  # interior grads are transient; leaves keep theirs
        node._backward = None
        node._parents = ()
    tape.clear()
    _state.last_audit = {"nodes_visited": visited, "max_visits_per_node": max_visits}


# ---------------------------------------------------------------------------
# elementwise arithmetic


def _bias_axes(full: tuple, trailing: tuple) -> tuple:
    """Leading axes to reduce when `trailing` was broadcast against `full`."""
    if full[len(full) - len(trailing):] != trailing:
        raise DimensionError(f"shapes {full} and {trailing} are not trailing-compatible")
    return tuple(range(len(full) - len(trailing)))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; `b` may be a trailing-shape bias."""
    if a.shape == b.shape:
        out = Tensor(a.data + b.data)

        def rule(g):
            if a.requires_grad or a._backward is not None:
                a._accumulate(g)
            if b.requires_grad or b._backward is not None:
                b._accumulate(g)

        return _track(out, (a, b), rule)
    axes = _bias_axes(a.shape, b.shape)
    out = Tensor(a.data + b.data)

    def rule(g):
        if a.requires_grad or a._backward is not None:
            a._accumulate(g)
        if b.requires_grad or b._backward is not None:
            b._accumulate(g.sum(axis=axes) if axes else g)

    return _track(out, (a, b), rule)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"sub requires equal shapes, got {a.shape} and {b.shape}")
    out = Tensor(a.data - b.data)

    def rule(g):
        if a.requires_grad or a._backward is not None:
            a._accumulate(g)
        if b.requires_grad or b._backward is not None:
            b._accumulate(-g)

    return _track(out, (a, b), rule)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"mul requires equal shapes, got {a.shape} and {b.shape}")
    out = Tensor(a.data * b.data)

    def rule(g):
        if a.requires_grad or a._backward is not None:
            a._accumulate(g * b.data)
        if b.requires_grad or b._backward is not None:
            b._accumulate(g * a.data)

    return _track(out, (a, b), rule)


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)

    def rule(g):
        a._accumulate(g * c)

    return _track(out, (a,), rule)


def shift(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data + c)

    def rule(g):
        a._accumulate(g)

    return _track(out, (a,), rule)


# ---------------------------------------------------------------------------
# linear algebra and shape ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; batched when both operands share leading dims,
    or when `b` is a plain 2-D matrix applied to every batch row of `a`.
    Registers dA = G @ B^T and dB = A^T @ G.
    """
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2:
        raise DimensionError(f"matmul needs >=2-D operands, got {ad.shape} and {bd.shape}")
    if ad.shape[-1] != bd.shape[-2]:
        raise DimensionError(f"matmul inner dimensions disagree: {ad.shape} vs {bd.shape}")
    if bd.ndim != 2 and ad.shape[:-2] != bd.shape[:-2]:
        raise DimensionError(f"matmul batch dimensions disagree: {ad.shape} vs {bd.shape}")
    out = Tensor(np.matmul(ad, bd))

    def rule(g):
        if a.requires_grad or a._backward is not None:
            a._accumulate(np.matmul(g, bd.swapaxes(-1, -2)))
        if b.requires_grad or b._backward is not None:
            if bd.ndim == 2 and ad.ndim > 2:
                k, n = bd.shape
                b._accumulate(ad.reshape(-1, k).T @ g.reshape(-1, n))
            else:
                b._accumulate(np.matmul(ad.swapaxes(-1, -2), g))

    return _track(out, (a, b), rule)


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    perm = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    if sorted(perm) != list(range(a.ndim)):
        raise DimensionError(f"invalid transpose axes {perm} for shape {a.shape}")
    inv = np.argsort(perm)
    out = Tensor(np.transpose(a.data, perm))

    def rule(g):
        a._accumulate(np.transpose(g, inv))

    return _track(out, (a,), rule)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor(a.data.reshape(tuple(shape)))

    def rule(g):
        a._accumulate(g.reshape(a.data.shape))

    return _track(out, (a,), rule)


def slice_(a: Tensor, key) -> Tensor:
    """Basic slicing/indexing; the backward scatters into a zero buffer."""
    if isinstance(key, (np.ndarray, list)):
        raise InputError("fancy indexing is not differentiable here; use index_rows")
    out = Tensor(a.data[key])

    def rule(g):
        buf = np.zeros_like(a.data)
        buf[key] = g
        a._accumulate(buf)

    return _track(out, (a,), rule)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    datas = [p.data for p in parts]
    out = Tensor(np.concatenate(datas, axis=axis))
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def rule(g):
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad or p._backward is not None:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(start, stop)
                p._accumulate(g[tuple(idx)])

    return _track(out, tuple(parts), rule)


def index_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows along axis 0; backward scatter-adds (indices may repeat)."""
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(a.data[idx])

    def rule(g):
        buf = np.zeros_like(a.data)
        np.add.at(buf, idx, g)
        a._accumulate(buf)

    return _track(out, (a,), rule)


def take_along_last(a: Tensor, idx: np.ndarray) -> Tensor:
    """Gather along the last axis with per-row integer indices.

    Indices must be distinct within each row (true for top-k bins), which
    lets the backward use put_along_axis without accumulation clashes.
    """
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(np.take_along_axis(a.data, idx, axis=-1))

    def rule(g):
        buf = np.zeros_like(a.data)
        np.put_along_axis(buf, idx, g, axis=-1)
        a._accumulate(buf)

    return _track(out, (a,), rule)


# ---------------------------------------------------------------------------
# nonlinearities


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0))

    def rule(g):
        a._accumulate(g * (a.data > 0.0))

    return _track(out, (a,), rule)


def gelu(a: Tensor) -> Tensor:
    """Exact Gaussian-error-function form of GELU."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    out = Tensor(x * cdf)

    def rule(g):
        pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
        a._accumulate(g * (cdf + x * pdf))

    return _track(out, (a,), rule)


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid_raw(a.data)
    out = Tensor(y)

    def rule(g):
        a._accumulate(g * y * (1.0 - y))

    return _track(out, (a,), rule)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y)

    def rule(g):
        a._accumulate(g * (1.0 - y * y))

    return _track(out, (a,), rule)


def _sigmoid_raw(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along `axis` (max subtraction first)."""
    if not -a.ndim <= axis < a.ndim:
        raise DimensionError(f"softmax axis {axis} invalid for shape {a.shape}")
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y)

    def rule(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        a._accumulate(y * (g - inner))

    return _track(out, (a,), rule)


def layer_norm(a: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    d = a.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"layer_norm affine params must have shape ({d},)")
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gamma.data + beta.data)

    def rule(g):
        if gamma.requires_grad or gamma._backward is not None:
            gamma._accumulate((g * xhat).reshape(-1, d).sum(axis=0))
        if beta.requires_grad or beta._backward is not None:
            beta._accumulate(g.reshape(-1, d).sum(axis=0))
        if a.requires_grad or a._backward is not None:
            gx = g * gamma.data
            m1 = gx.mean(axis=-1, keepdims=True)
            m2 = (gx * xhat).mean(axis=-1, keepdims=True)
            a._accumulate(inv * (gx - m1 - xhat * m2))

    return _track(out, (a, gamma, beta), rule)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean of squared elementwise differences; exact zero when pred == target."""
    if pred.shape != target.shape:
        raise DimensionError(f"mse_loss shapes disagree: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    out = Tensor(np.mean(diff * diff))

    def rule(g):
        scaled = (2.0 / diff.size) * float(g.reshape(())) * diff
        if pred.requires_grad or pred._backward is not None:
            pred._accumulate(scaled)
        if target.requires_grad or target._backward is not None:
            target._accumulate(-scaled)

    return _track(out, (pred, target), rule)


# ---------------------------------------------------------------------------
# convolution


def conv1d_dilated(x: Tensor, kernel: Tensor, dilation: int = 1, causal_padding: bool = True,
                   bias: Tensor | None = None) -> Tensor:
    """Dilated 1-D convolution over [.., channels, length].

    With causal padding the output keeps the input length and position t
    only sees inputs at times <= t (left zero-pad of (k-1)*dilation).
    Without it, a valid convolution of length L - (k-1)*dilation.
    An optional per-output-channel bias is added across time.
    """
    if dilation < 1:
        raise InputError(f"dilation must be >= 1, got {dilation}")
    squeeze = x.ndim == 2
    xd = x.data[None] if squeeze else x.data
    w = kernel.data
    if xd.ndim != 3 or w.ndim != 3:
        raise DimensionError(f"conv1d expects [B,C,L] and [O,C,K], got {x.shape} and {kernel.shape}")
    batch, cin, length = xd.shape
    cout, kin, ksz = w.shape
    if kin != cin:
        raise DimensionError(f"conv1d channel mismatch: input has {cin}, kernel expects {kin}")
    if ksz < 1:
        raise InputError("kernel size must be >= 1")
    span = (ksz - 1) * dilation
    if causal_padding:
        xp = np.zeros((batch, cin, length + span))
        xp[:, :, span:] = xd
        lout = length
    else:
        if length < span + 1:
            raise DimensionError(f"input length {length} shorter than receptive span {span + 1}")
        xp = xd
        lout = length - span
    y = np.zeros((batch, cout, lout))
    for j in range(ksz):
        y += np.matmul(w[:, :, j], xp[:, :, j * dilation : j * dilation + lout])
    if bias is not None:
        if bias.shape != (cout,):
            raise DimensionError(f"conv1d bias must have shape ({cout},), got {bias.shape}")
        y += bias.data[:, None]
    out = Tensor(y[0] if squeeze else y)
    parents = (x, kernel) if bias is None else (x, kernel, bias)

    def rule(g):
        gb = g[None] if squeeze else g
        if bias is not None and (bias.requires_grad or bias._backward is not None):
            bias._accumulate(gb.sum(axis=(0, 2)))
        if kernel.requires_grad or kernel._backward is not None:
            dw = np.empty_like(w)
            for j in range(ksz):
                seg = xp[:, :, j * dilation : j * dilation + lout]
                dw[:, :, j] = np.einsum("bol,bcl->oc", gb, seg)
            kernel._accumulate(dw)
        if x.requires_grad or x._backward is not None:
            dxp = np.zeros_like(xp)
            for j in range(ksz):
                dxp[:, :, j * dilation : j * dilation + lout] += np.matmul(w[:, :, j].T, gb)
            dx = dxp[:, :, span:] if causal_padding else dxp
            x._accumulate(dx[0] if squeeze else dx)

    return _track(out, parents, rule)


def conv2d_same(x: Tensor, kernel: Tensor, bias: Tensor | None = None) -> Tensor:
    """2-D convolution with odd square kernels and same-padding, over [B,C,H,W]."""
    xd, w = x.data, kernel.data
    if xd.ndim != 4 or w.ndim != 4:
        raise DimensionError(f"conv2d expects [B,C,H,W] and [O,C,kh,kw], got {x.shape} and {kernel.shape}")
    batch, cin, hh, ww = xd.shape
    cout, kin, kh, kw = w.shape
    if kin != cin:
        raise DimensionError(f"conv2d channel mismatch: input has {cin}, kernel expects {kin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise InputError("conv2d_same requires odd kernel sides")
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((batch, cin, hh + 2 * ph, ww + 2 * pw))
    xp[:, :, ph : ph + hh, pw : pw + ww] = xd
    acc = np.zeros((batch, cout, hh * ww))
    for dy in range(kh):
        for dx_ in range(kw):
            seg = xp[:, :, dy : dy + hh, dx_ : dx_ + ww].reshape(batch, cin, hh * ww)
            acc += np.matmul(w[:, :, dy, dx_], seg)
    if bias is not None:
        if bias.shape != (cout,):
            raise DimensionError(f"conv2d bias must have shape ({cout},), got {bias.shape}")
        acc += bias.data[:, None]
    out = Tensor(acc.reshape(batch, cout, hh, ww))
    parents = (x, kernel) if bias is None else (x, kernel, bias)

    def rule(g):
        gf = g.reshape(batch, cout, hh * ww)
        if bias is not None and (bias.requires_grad or bias._backward is not None):
            bias._accumulate(gf.sum(axis=(0, 2)))
        if kernel.requires_grad or kernel._backward is not None:
            dw = np.empty_like(w)
            for dy in range(kh):
                for dx_ in range(kw):
                    seg = xp[:, :, dy : dy + hh, dx_ : dx_ + ww].reshape(batch, cin, hh * ww)
                    dw[:, :, dy, dx_] = np.einsum("bos,bcs->oc", gf, seg)
            kernel._accumulate(dw)
        if x.requires_grad or x._backward is not None:
            dxp = np.zeros_like(xp)
            for dy in range(kh):
                for dx_ in range(kw):
                    dxp[:, :, dy : dy + hh, dx_ : dx_ + ww] += np.matmul(
                        w[:, :, dy, dx_].T, gf
                    ).reshape(batch, cin, hh, ww)
            x._accumulate(dxp[:, :, ph : ph + hh, pw : pw + ww])

    return _track(out, parents, rule)


# ---------------------------------------------------------------------------
# attention


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor) -> tuple[Tensor, np.ndarray]:
    """softmax(q k^T / sqrt(d)) v over the last two axes.

    Accepts any shared leading (head/batch) dims. Returns the output and a
    read-only copy of the attention weights for inspection; every weight
    row sums to 1.
    """
    if not (q.shape == k.shape == v.shape):
        raise DimensionError(f"attention operands disagree: {q.shape}, {k.shape}, {v.shape}")
    if q.ndim < 2:
        raise DimensionError(f"attention needs [..., n, d], got {q.shape}")
    d = q.shape[-1]
    inv_sqrt_d = 1.0 / np.sqrt(d)
    scores = np.matmul(q.data, k.data.swapaxes(-1, -2)) * inv_sqrt_d
    scores -= scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    attn = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(np.matmul(attn, v.data))

    def rule(g):
        if v.requires_grad or v._backward is not None:
            v._accumulate(np.matmul(attn.swapaxes(-1, -2), g))
        d_attn = np.matmul(g, v.data.swapaxes(-1, -2))
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
        d_scores *= inv_sqrt_d
        if q.requires_grad or q._backward is not None:
            q._accumulate(np.matmul(d_scores, k.data))
        if k.requires_grad or k._backward is not None:
            k._accumulate(np.matmul(d_scores.swapaxes(-1, -2), q.data))

    weights = attn.copy()
    weights.setflags(write=False)
    return _track(out, (q, k, v), rule), weights


# ---------------------------------------------------------------------------
# recurrent scan


def lstm_scan(gates_x: Tensor, wh: Tensor) -> Tensor:
    """One LSTM layer unrolled over time, as a single graph node.

    `gates_x` is the precomputed input contribution x_t W_x + b with shape
    [B, L, 4H] and gate order (input, forget, output, candidate); `wh` is
    the recurrent matrix [H, 4H]. Initial hidden and cell states are zero.
    Returns the hidden sequence [B, L, H]; the backward pass runs full
    BPTT with gradients for both inputs.
    """
    gx = gates_x.data
    whd = wh.data
    if gx.ndim != 3 or whd.ndim != 2:
        raise DimensionError(f"lstm_scan expects [B,L,4H] and [H,4H], got {gates_x.shape} and {wh.shape}")
    batch, length, four_h = gx.shape
    hid = whd.shape[0]
    if four_h != 4 * hid or whd.shape[1] != four_h:
        raise DimensionError(f"lstm_scan gate width {four_h} inconsistent with hidden size {hid}")
    gates = np.empty((length, batch, four_h))
    cells = np.empty((length, batch, hid))
    tanh_c = np.empty((length, batch, hid))
    hs = np.empty((length, batch, hid))
    h = np.zeros((batch, hid))
    c = np.zeros((batch, hid))
    s3 = 3 * hid
    for t in range(length):
        z = gx[:, t, :] + h @ whd
        z[:, :s3] = _sigmoid_raw(z[:, :s3])
        z[:, s3:] = np.tanh(z[:, s3:])
        i, f, o, gcell = z[:, :hid], z[:, hid : 2 * hid], z[:, 2 * hid : s3], z[:, s3:]
        c = f * c + i * gcell
        tc = np.tanh(c)
        h = o * tc
        gates[t] = z
        cells[t] = c
        tanh_c[t] = tc
        hs[t] = h
    out = Tensor(hs.transpose(1, 0, 2))

    def rule(g):
        gseq = g.transpose(1, 0, 2)  # [L, B, H]
        dz_all = np.empty((length, batch, four_h))
        dh = np.zeros((batch, hid))
        dc = np.zeros((batch, hid))
        for t in range(length - 1, -1, -1):
            z = gates[t]
            i, f, o, gcell = z[:, :hid], z[:, hid : 2 * hid], z[:, 2 * hid : s3], z[:, s3:]
            dh = dh + gseq[t]
            tc = tanh_c[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            c_prev = cells[t - 1] if t > 0 else np.zeros((batch, hid))
            di = dc * gcell
            df = dc * c_prev
            dg = dc * i
            dz = dz_all[t]
            dz[:, :hid] = di * i * (1.0 - i)
            dz[:, hid : 2 * hid] = df * f * (1.0 - f)
            dz[:, 2 * hid : s3] = do * o * (1.0 - o)
            dz[:, s3:] = dg * (1.0 - gcell * gcell)
            dc = dc * f
            dh = dz @ whd.T
        if gates_x.requires_grad or gates_x._backward is not None:
            gates_x._accumulate(dz_all.transpose(1, 0, 2))
        if wh.requires_grad or wh._backward is not None:
            h_prev = np.concatenate([np.zeros((1, batch, hid)), hs[:-1]], axis=0)
            wh._accumulate(h_prev.reshape(-1, hid).T @ dz_all.reshape(-1, four_h))

    return _track(out, (gates_x, wh), rule)


# ---------------------------------------------------------------------------
# spectral


def rfft_magnitudes(x: Tensor) -> Tensor:
    """Real-input DFT magnitudes over the last axis (bins 0..n//2).

    Bin 0 is the mean component scaled by n. Differentiable everywhere the
    magnitude is nonzero; zero bins contribute zero subgradient.
    """
    n = x.shape[-1]
    if n < 2:
        raise InputError(f"rfft_magnitudes requires length >= 2, got {n}")
    spectrum = _fft.rfft(x.data)
    mags = np.abs(spectrum)
    out = Tensor(mags)

    def rule(g):
        safe = np.where(mags == 0.0, 1.0, mags)
        phase = np.where(mags == 0.0, 0.0, 1.0) * spectrum / safe
        x._accumulate(_fft.rfft_adjoint(g * phase, n))

    return _track(out, (x,), rule)
