"""Expression evaluation and forward-mode automatic differentiation.

Evaluation is vectorized over data points and follows IEEE semantics:
division by zero and powabs(0, negative) produce non-finite values that
propagate to the caller instead of raising.

``eval_with_grad`` carries one derivative lane per requested direction
(parameters, optionally the input x) through the whole tree, applying the
chain rule at each operator.  powabs(a, b) = |a|**b differentiates to
|a|**b * (b'*log|a| + b*a'/a); at a == 0 the derivative is 0 when b > 1 and
non-finite otherwise (the almost-everywhere value, which avoids poisoning
whole-gradient checks at isolated points).
"""

from __future__ import annotations

import numpy as np

from .expr import (
    Expr, VAR, PARAM, CONST, ADD, SUB, MUL, DIV, INV, POWABS, NEG, ABS,
)

__all__ = ["eval_expr", "eval_with_grad"]


def _as_points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def eval_expr(e: Expr, theta, x) -> np.ndarray | float:
    """Evaluate ``e`` at parameter vector ``theta`` over points ``x``.

    ``x`` may be a scalar, a 1-d array (variable x1), or a 2-d array with one
    row per variable.  Returns a scalar for scalar input.
    """
    scalar = np.ndim(x) == 0
    pts = _as_points(x)
    theta = np.asarray(theta, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(e, theta, pts)
        out = np.broadcast_to(out, pts.shape[-1:]).astype(float) \
            if np.ndim(out) == 0 else out
    return float(out[0]) if scalar else out


def _var_values(pts: np.ndarray, index: int) -> np.ndarray:
    if pts.ndim == 1:
        if index != 1:
            raise ValueError(f"x{index} requested but x is one-dimensional")
        return pts
    return pts[index - 1]


def _eval(e: Expr, theta: np.ndarray, pts: np.ndarray):
    k = e.kind
    if k == VAR:
        return _var_values(pts, e.value)
    if k == PARAM:
        if e.value > len(theta):
            raise ValueError(f"p{e.value} requested but theta has "
                             f"{len(theta)} entries")
        return theta[e.value - 1]
    if k == CONST:
        return e.value
    if k == ADD:
        return _eval(e.children[0], theta, pts) + _eval(e.children[1], theta, pts)
    if k == SUB:
        return _eval(e.children[0], theta, pts) - _eval(e.children[1], theta, pts)
    if k == MUL:
        return _eval(e.children[0], theta, pts) * _eval(e.children[1], theta, pts)
    if k == DIV:
        return np.divide(_eval(e.children[0], theta, pts),
                         _eval(e.children[1], theta, pts))
    if k == INV:
        return np.divide(1.0, _eval(e.children[0], theta, pts))
    if k == POWABS:
        a = _eval(e.children[0], theta, pts)
        b = _eval(e.children[1], theta, pts)
        return np.power(np.abs(a), b)
    if k == NEG:
        return -_eval(e.children[0], theta, pts)
    if k == ABS:
        return np.abs(_eval(e.children[0], theta, pts))
    raise ValueError(f"cannot evaluate node kind {k}")


class _Dual:
    """Value plus derivative lanes, both broadcastable to (n,) / (L, n)."""

    __slots__ = ("v", "d")

    def __init__(self, v, d):
        self.v = v
        self.d = d


def _dual_eval(e: Expr, theta, pts, lanes: int, x_lane: int | None):
    k = e.kind
    n = pts.shape[-1]
    if k == VAR:
        v = _var_values(pts, e.value)
        d = np.zeros((lanes, n))
        if x_lane is not None and e.value == 1:
            d[x_lane] = 1.0
        return _Dual(v, d)
    if k == PARAM:
        if e.value > len(theta):
            raise ValueError(f"p{e.value} requested but theta has "
                             f"{len(theta)} entries")
        v = np.full(n, theta[e.value - 1])
        d = np.zeros((lanes, n))
        if e.value - 1 < (lanes if x_lane is None else x_lane):
            d[e.value - 1] = 1.0
        return _Dual(v, d)
    if k == CONST:
        return _Dual(np.full(n, e.value), np.zeros((lanes, n)))
    if k in (ADD, SUB):
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        b = _dual_eval(e.children[1], theta, pts, lanes, x_lane)
        if k == ADD:
            return _Dual(a.v + b.v, a.d + b.d)
        return _Dual(a.v - b.v, a.d - b.d)
    if k == MUL:
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        b = _dual_eval(e.children[1], theta, pts, lanes, x_lane)
        return _Dual(a.v * b.v, a.d * b.v + b.d * a.v)
    if k in (DIV, INV):
        if k == INV:
            a = None
            b = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
            v = np.divide(1.0, b.v)
            return _Dual(v, -b.d * v * v)
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        b = _dual_eval(e.children[1], theta, pts, lanes, x_lane)
        v = np.divide(a.v, b.v)
        return _Dual(v, np.divide(a.d, b.v) - np.divide(v * b.d, b.v))
    if k == POWABS:
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        b = _dual_eval(e.children[1], theta, pts, lanes, x_lane)
        absa = np.abs(a.v)
        v = np.power(absa, b.v)
        d = v * (b.d * np.log(absa) + np.divide(b.v * a.d, a.v))
        at_zero = a.v == 0.0
        if np.any(at_zero):
            smooth = at_zero & (b.v > 1.0)
            d = np.where(smooth, 0.0, d)
        return _Dual(v, d)
    if k == NEG:
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        return _Dual(-a.v, -a.d)
    if k == ABS:
        a = _dual_eval(e.children[0], theta, pts, lanes, x_lane)
        return _Dual(np.abs(a.v), a.d * np.sign(a.v))
    raise ValueError(f"cannot differentiate node kind {k}")


def eval_with_grad(e: Expr, theta, x, wrt: str = "params"):
    """Evaluate ``e`` and its gradient.

    wrt="params": lanes are d/dp1..d/dpk.
    wrt="params_and_x": one extra final lane d/dx.
    wrt="x": a single d/dx lane.

    Returns (value, grad) with value shaped like the points and grad with one
    row per lane.  Gradient values match central finite differences wherever
    the function is differentiable.
    """
    scalar = np.ndim(x) == 0
    pts = _as_points(x)
    theta = np.asarray(theta, dtype=float)
    n_params = len(theta)
    if wrt == "params":
        lanes, x_lane = n_params, None
    elif wrt == "params_and_x":
        lanes, x_lane = n_params + 1, n_params
    elif wrt == "x":
        lanes, x_lane = 1, 0
    else:
        raise ValueError(f"unknown wrt {wrt!r}")
    if wrt == "x":
        with np.errstate(all="ignore"):
            # parameters get no lanes: run with zero param lanes, x in lane 0
            out = _dual_eval(e, theta, pts, 1, 0)
    else:
        with np.errstate(all="ignore"):
            out = _dual_eval(e, theta, pts, lanes, x_lane)
    v, g = out.v, out.d
    if scalar:
        return float(v[0]), g[:, 0]
    return v, g
