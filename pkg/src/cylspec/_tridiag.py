"""Tridiagonal LU with partial pivoting (real or complex), gttrf/gttrs style."""
from __future__ import annotations

import numpy as np


class TridiagonalLU:
    """Factor ``A - shift I`` once, solve many times.

    Zero pivots are replaced by ``tiny`` so nearly singular shifts (the
    inverse-iteration case) still produce a usable solve.
    """

    def __init__(self, diag, lower, upper, shift=0.0, tiny=None):
        d = np.array(diag, dtype=np.result_type(diag, lower, upper, shift)) - shift
        dl = np.array(lower, dtype=d.dtype)
        du = np.array(upper, dtype=d.dtype)
        n = len(d)
        du2 = np.zeros(max(n - 2, 0), dtype=d.dtype)
        piv = np.zeros(n, dtype=bool)
        if tiny is None:
            scale = max(np.abs(d).max(initial=0), np.abs(dl).max(initial=0),
                        np.abs(du).max(initial=0), 1.0)
            tiny = np.finfo(float).eps * scale
        d = d.tolist()
        dl = dl.tolist()
        du = du.tolist()
        du2 = du2.tolist()
        for i in range(n - 1):
            if abs(d[i]) >= abs(dl[i]):
                if d[i] == 0:
                    d[i] = tiny
                fact = dl[i] / d[i]
                dl[i] = fact
                d[i + 1] -= fact * du[i]
            else:
                fact = d[i] / dl[i]
                d[i] = dl[i]
                dl[i] = fact
                temp = du[i]
                du[i] = d[i + 1]
                d[i + 1] = temp - fact * d[i + 1]
                if i < n - 2:
                    du2[i] = du[i + 1]
                    du[i + 1] = -fact * du[i + 1]
                piv[i] = True
        if n and d[n - 1] == 0:
            d[n - 1] = tiny
        self.n = n
        self.d, self.dl, self.du, self.du2 = d, dl, du, du2
        self.piv = piv.tolist()

    def solve(self, b):
        x = list(np.asarray(b).tolist())
        n = self.n
        d, dl, du, du2, piv = self.d, self.dl, self.du, self.du2, self.piv
        for i in range(n - 1):
            if piv[i]:
                x[i], x[i + 1] = x[i + 1], x[i] - dl[i] * x[i + 1]
            else:
                x[i + 1] -= dl[i] * x[i]
        x[n - 1] /= d[n - 1]
        if n > 1:
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
        for i in range(n - 3, -1, -1):
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
        return np.array(x)
