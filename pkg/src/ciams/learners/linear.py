"""Elastic-net logistic regression via proximal gradient with step halving."""

import numpy as np

from ..errors import ValidationError


def _objective(x, y, w, b, mix, lam):
    margins = y * (x @ w + b)
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    penalty = lam * (mix * np.abs(w).sum() + 0.5 * (1.0 - mix) * float(w @ w))
    return loss + penalty


def _smooth_grad(x, y, w, b, mix, lam):
    margins = y * (x @ w + b)
    sig = 1.0 / (1.0 + np.exp(np.clip(margins, -60, 60)))
    coef = -y * sig / y.size
    grad_w = x.T @ coef + lam * (1.0 - mix) * w
    grad_b = float(coef.sum())
    return grad_w, grad_b


def _soft_threshold(w, amount):
    return np.sign(w) * np.maximum(np.abs(w) - amount, 0.0)


def fit_logistic_elastic(x, y, mix, lam, max_epochs=300, tol=1e-9):
    """Minimize logistic loss + lam*(mix*L1 + (1-mix)/2*L2) on the weights.

    The intercept is unpenalized. Each epoch is a proximal gradient step with
    backtracking, so the objective never increases; returns (w, b, history).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (-1, 1)).all():
        raise ValidationError("labels must be in {-1, +1}")
    w = np.zeros(x.shape[1])
    b = 0.0
    step = 1.0
    history = [_objective(x, y, w, b, mix, lam)]
    for _ in range(max_epochs):
        grad_w, grad_b = _smooth_grad(x, y, w, b, mix, lam)
        improved = False
        for _ in range(40):
            w_new = _soft_threshold(w - step * grad_w, step * lam * mix)
            b_new = b - step * grad_b
            obj_new = _objective(x, y, w_new, b_new, mix, lam)
            if obj_new <= history[-1] - 1e-15:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        w, b = w_new, b_new
        history.append(obj_new)
        step *= 1.3  # allow the step to grow back after cautious epochs
        if len(history) >= 2 and history[-2] - history[-1] < tol:
            break
    return w, float(b), history


class LogisticElasticNet:
    def __init__(self, mix, lam):
        self.mix = mix
        self.lam = lam
        self.w = None
        self.b = 0.0

    def fit(self, x, y):
        self.w, self.b, _ = fit_logistic_elastic(x, y, self.mix, self.lam)
        return self

    def predict(self, x):
        scores = np.asarray(x, dtype=float) @ self.w + self.b
        return np.where(scores >= 0, 1, -1).astype(np.int64)
