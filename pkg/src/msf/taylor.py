"""Truncated Taylor jets of function nodes, computed without symbolic derivatives.

A jet of order N at r is the array ``[f(r), f'(r)/1!, ..., f^(N)(r)/N!]``.
It comes from power-series arithmetic on the expression tree. The
riccati-lambda node is expanded as a quotient of series, not through its
Riccati identity, so jets act as an independent check on ``derivative()``.
"""

from __future__ import annotations

import math
from functools import singledispatch

import numpy as np

from . import functions as fn


def jet(f: fn.SmoothFn, r: float, order: int) -> np.ndarray:
    r = float(r)
    if not f.domain.contains(r):
        raise fn.DomainError(f"jet requested at r={r!r} outside {f.domain}")
    return _jet(f, r, order, {})


def derivatives(f: fn.SmoothFn, r: float, order: int) -> np.ndarray:
    """[f(r), f'(r), ..., f^(order)(r)] from the jet."""
    j = jet(f, r, order)
    return j * np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


def _jet(f, r, order, memo):
    key = (f.serial, order)
    out = memo.get(key)
    if out is None:
        out = _node_jet(f, r, order, memo)
        memo[key] = out
    return out


# -- series arithmetic ---------------------------------------------------------


def series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def series_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    if b[0] == 0.0:
        raise fn.VanishingDenominatorError("series division by a jet with zero constant term")
    q = np.zeros(n)
    for k in range(n):
        q[k] = (a[k] - np.dot(q[:k], b[k:0:-1])) / b[0]
    return q


def series_exp(a: np.ndarray) -> np.ndarray:
    n = len(a)
    h = np.zeros(n)
    h[0] = math.exp(a[0])
    for k in range(1, n):
        j = np.arange(1, k + 1)
        h[k] = np.dot(j * a[1:k + 1], h[k - 1::-1][:k]) / k
    return h


def series_pow(a: np.ndarray, p: float) -> np.ndarray:
    n = len(a)
    if a[0] == 0.0:
        raise fn.DomainError("real power of a jet with zero constant term")
    h = np.zeros(n)
    h[0] = a[0] ** p
    for k in range(1, n):
        j = np.arange(1, k + 1)
        h[k] = np.dot((p * j - (k - j)) * a[1:k + 1], h[k - 1::-1][:k]) / (k * a[0])
    return h


def series_compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """sum_k outer[k] * (inner - inner[0])**k, truncated."""
    n = len(inner)
    d = inner.copy()
    d[0] = 0.0
    out = np.zeros(n)
    pw = np.zeros(n)
    pw[0] = 1.0
    for k in range(min(len(outer), n)):
        out = out + outer[k] * pw
        pw = series_mul(pw, d)
    return out


def series_derivative(a: np.ndarray, times: int = 1) -> np.ndarray:
    """Jet of the derivative (one order shorter per application)."""
    for _ in range(times):
        k = np.arange(1, len(a))
        a = a[1:] * k
    return a


# -- per-node rules ------------------------------------------------------------


def _binomial_series(p: float, r: float, order: int) -> np.ndarray:
    out = np.zeros(order + 1)
    if float(p).is_integer() and p >= 0:
        p_int = int(p)
        for k in range(min(order, p_int) + 1):
            out[k] = math.comb(p_int, k) * r ** (p_int - k)
        return out
    coef = 1.0
    for k in range(order + 1):
        out[k] = coef * r ** (p - k)
        coef *= (p - k) / (k + 1)
    return out


@singledispatch
def _node_jet(f, r, order, memo):
    raise TypeError(f"no jet rule for {type(f).__name__}")


@_node_jet.register
def _(f: fn.PowerSum, r, order, memo):
    out = np.zeros(order + 1)
    for p, c in f.terms:
        out = out + c * _binomial_series(p, r, order)
    return out


@_node_jet.register
def _(f: fn.Sum, r, order, memo):
    out = np.zeros(order + 1)
    for c, b in f.terms:
        out = out + c * _jet(b, r, order, memo)
    return out


@_node_jet.register
def _(f: fn.Product, r, order, memo):
    out = np.zeros(order + 1)
    out[0] = f.coef
    for g in f.factors:
        out = series_mul(out, _jet(g, r, order, memo))
    return out


@_node_jet.register
def _(f: fn.Exp, r, order, memo):
    return series_exp(_jet(f.arg, r, order, memo))


@_node_jet.register
def _(f: fn.Reciprocal, r, order, memo):
    one = np.zeros(order + 1)
    one[0] = 1.0
    return series_div(one, _jet(f.base, r, order, memo))


@_node_jet.register
def _(f: fn.PowerOf, r, order, memo):
    return series_pow(_jet(f.base, r, order, memo), f.p)


@_node_jet.register
def _(f: fn.Antiderivative, r, order, memo):
    out = np.zeros(order + 1)
    out[0] = fn.evaluate(f, r)
    if order:
        g = _jet(f.integrand, r, order - 1, memo)
        out[1:] = g / np.arange(1, order + 1)
    return out


@_node_jet.register
def _(f: fn.RiccatiLambda, r, order, memo):
    num = _jet(f.factor, r, order, memo)
    den = _jet(f.integral, r, order, memo).copy()
    den[0] += f.C
    return series_div(num, den)


@_node_jet.register
def _(f: fn.Compose, r, order, memo):
    inner = _jet(f.inner, r, order, memo)
    outer = jet(f.outer, inner[0], order)
    return series_compose(outer, inner)


@_node_jet.register
def _(f: fn.OdeSolution, r, order, memo):
    # Picard-style recurrence: x_{k+1} = (F o x)_k / (k + 1)
    x = np.zeros(order + 1)
    x[0] = fn.evaluate(f, r)
    if order == 0:
        return x
    Fj = jet(f.F, x[0], order)
    for k in range(order):
        fx = series_compose(Fj, x[:k + 1])
        x[k + 1] = fx[k] / (k + 1)
    return x
