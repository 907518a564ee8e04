"""Quadrature rules on the reference triangle and reference segment.

Reference triangle: vertices (0,0), (1,0), (0,1), area 1/2.
Reference segment: [0,1].

Triangle rules are built by collapsing a tensor-product Gauss-Legendre rule
through the Duffy map x = s(1-t), y = t; weights stay positive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, dim) for triangle, (nq,) for segment
    weights: np.ndarray  # (nq,)
    exactness: int       # polynomial degree integrated exactly


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def segment_rule(exactness: int) -> QuadratureRule:
    if exactness < 0:
        raise ValueError("exactness must be nonnegative")
    n = exactness // 2 + 1
    x, w = gauss_legendre_01(n)
    return QuadratureRule(points=x, weights=w, exactness=2 * n - 1)


def triangle_rule(exactness: int) -> QuadratureRule:
    """Duffy-collapsed rule exact for total degree <= `exactness`.

    After the Duffy map a monomial of total degree p picks up one extra
    power from the Jacobian (1-t), so each 1D rule must handle degree p+1.
    """
    if exactness < 0:
        raise ValueError("exactness must be nonnegative")
    n = (exactness + 1) // 2 + 1
    s, ws = gauss_legendre_01(n)
    t, wt = gauss_legendre_01(n)
    S, T = np.meshgrid(s, t, indexing="ij")
    WS, WT = np.meshgrid(ws, wt, indexing="ij")
    x = (S * (1.0 - T)).ravel()
    y = T.ravel()
    w = (WS * WT * (1.0 - T)).ravel()
    pts = np.column_stack([x, y])
    return QuadratureRule(points=pts, weights=w, exactness=exactness)
