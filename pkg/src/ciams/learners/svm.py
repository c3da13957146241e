"""RBF-kernel support vector machine trained with sequential minimal optimization."""

import numpy as np

from ..errors import ValidationError
from ..util import rng_for


def rbf_kernel(a, b, gamma):
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    d2 = np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)
    return np.exp(-gamma * d2)


def rbf_gamma(x):
    """Kernel bandwidth 1 / (p * sigma), sigma the variance of the flat matrix."""
    x = np.asarray(x, dtype=float)
    sigma = float(np.var(x))
    p = x.shape[1]
    if sigma <= 0:
        return 1.0 / p
    return 1.0 / (p * sigma)


def smo_fit(kernel, y, c, tol=1e-3, max_pass_rounds=40, seed=0):
    """Platt-style SMO on a precomputed kernel; returns (alphas, bias).

    Alternates full sweeps with sweeps over non-bound multipliers until a full
    sweep makes no progress; `max_pass_rounds` caps total sweeps for safety.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    alphas = np.zeros(n)
    b = 0.0
    errors = -y.copy()  # decision(x_i) - y_i with all alphas zero
    rng = rng_for(seed, "smo")

    def take_step(i, j):
        nonlocal b
        if i == j:
            return False
        ai, aj = alphas[i], alphas[j]
        yi, yj = y[i], y[j]
        ei, ej = errors[i], errors[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        if lo >= hi:
            return False
        eta = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if eta <= 1e-12:
            return False
        aj_new = aj + yj * (ei - ej) / eta
        aj_new = min(max(aj_new, lo), hi)
        if abs(aj_new - aj) < 1e-10 * (aj_new + aj + 1e-10):
            return False
        ai_new = ai + yi * yj * (aj - aj_new)
        b1 = b - ei - yi * (ai_new - ai) * kernel[i, i] - yj * (aj_new - aj) * kernel[i, j]
        b2 = b - ej - yi * (ai_new - ai) * kernel[i, j] - yj * (aj_new - aj) * kernel[j, j]
        if 0 < ai_new < c:
            b_new = b1
        elif 0 < aj_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        errors_delta = (
            yi * (ai_new - ai) * kernel[i]
            + yj * (aj_new - aj) * kernel[j]
            + (b_new - b)
        )
        errors[:] += errors_delta
        alphas[i], alphas[j] = ai_new, aj_new
        b = b_new
        return True

    def examine(i):
        ri = errors[i] * y[i]
        if (ri < -tol and alphas[i] < c) or (ri > tol and alphas[i] > 0):
            non_bound = np.flatnonzero((alphas > 0) & (alphas < c))
            if non_bound.size > 1:
                j = int(non_bound[np.argmax(np.abs(errors[i] - errors[non_bound]))])
                if take_step(i, j):
                    return True
            start = int(rng.integers(n))
            for off in range(n):
                j = (start + off) % n
                if j != i and take_step(i, j):
                    return True
        return False

    examine_all = True
    for _ in range(max_pass_rounds):
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.flatnonzero((alphas > 0) & (alphas < c)):
                changed += examine(int(i))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alphas, b


class SVC:
    """Binary RBF SVM; gamma defaults to the flat-variance heuristic."""

    def __init__(self, c=1.0, gamma=None, tol=1e-3, seed=0):
        self.c = c
        self.gamma = gamma
        self.tol = tol
        self.seed = seed
        self.support_x = None
        self.support_coef = None
        self.bias = 0.0

    def fit(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.isin(y, (-1, 1)).all():
            raise ValidationError("labels must be in {-1, +1}")
        gamma = self.gamma if self.gamma is not None else rbf_gamma(x)
        self._gamma_used = gamma
        kernel = rbf_kernel(x, x, gamma)
        alphas, b = smo_fit(kernel, y, self.c, tol=self.tol, seed=self.seed)
        keep = alphas > 1e-10
        self.support_x = x[keep]
        self.support_coef = (alphas * y)[keep]
        self.bias = b
        return self

    def decision_function(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.support_x.size == 0:
            return np.full(x.shape[0], self.bias)
        k = rbf_kernel(x, self.support_x, self._gamma_used)
        return k @ self.support_coef + self.bias

    def predict(self, x):
        return np.where(self.decision_function(x) >= 0, 1, -1).astype(np.int64)
