"""Statistical machinery: two-sample mean-vector test, error-margin test, metrics.

Every score used elsewhere in the pipeline (F1, R2, MAE, Spearman) lives here
so there is a single source of truth for each formula.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sl
from scipy import stats as ss

from .errors import ValidationError


@dataclass(frozen=True)
class HotellingResult:
    t2: float
    f_statistic: float
    p_value: float
    reject: bool
    alpha: float


@dataclass(frozen=True)
class MeanDiffTestResult:
    statistic: float
    p_value: float
    test_kind: str  # "t" or "Z"
    passed: bool


def f1_score(true_labels, predicted_labels):
    """Positive-class F1 for labels in {-1, +1}; zero denominators yield 0."""
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.shape != p.shape:
        raise ValidationError("label sequences differ in length")
    tp = np.sum((t == 1) & (p == 1))
    fp = np.sum((t == -1) & (p == 1))
    fn = np.sum((t == 1) & (p == -1))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return float(2.0 * precision * recall / (precision + recall))


def weighted_f1_score(true_labels, predicted_labels):
    """Support-weighted mean of the per-class F1 scores."""
    t = np.asarray(true_labels)
    total = t.size
    if total == 0:
        return 0.0
    score = 0.0
    for cls in (-1, 1):
        support = np.sum(t == cls)
        if support == 0:
            continue
        per_class = f1_score(t * cls, np.asarray(predicted_labels) * cls)
        score += (support / total) * per_class
    return float(score)


def r2_score(y_true, y_pred):
    """Coefficient of determination, 1 - SS_res / SS_tot."""
    y = np.asarray(y_true, dtype=float)
    f = np.asarray(y_pred, dtype=float)
    if y.size != f.size or y.size < 2:
        raise ValidationError("r2_score needs two equal-length arrays of size >= 2")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise ValidationError("r2_score undefined for zero-variance truth")
    ss_res = np.sum((y - f) ** 2)
    return float(1.0 - ss_res / ss_tot)


def mae(a, b):
    """Mean absolute difference of two equal-length sequences."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size != y.size or x.size == 0:
        raise ValidationError("mae needs two equal-length non-empty arrays")
    return float(np.mean(np.abs(x - y)))


def _average_ranks(x):
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y):
    """Rank correlation with averaged ties; constant input yields 0 by convention."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.size != ya.size or xa.size < 3:
        raise ValidationError("spearman needs two equal-length arrays of size >= 3")
    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt(np.sum(rx**2) * np.sum(ry**2))
    if denom == 0:
        return 0.0
    return float(np.clip(np.sum(rx * ry) / denom, -1.0, 1.0))


def hotelling_t2(sample_a, sample_b, alpha=0.05):
    """Two-sample mean-vector test with a ridge-regularized pooled covariance.

    T2 = (na*nb/(na+nb)) * d' S^-1 d with d the mean difference; converted to
    an F statistic with (p, na+nb-p-1) degrees of freedom.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValidationError("samples must be 2-D with matching column counts")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValidationError("samples contain non-finite values")
    na, p = a.shape
    nb = b.shape[0]
    if na < 2 or nb < 2:
        raise ValidationError("each sample needs at least 2 rows")
    df2 = na + nb - p - 1
    if df2 < 1:
        raise ValidationError("too few rows for the dimension: n_a+n_b must exceed p+1")

    diff = a.mean(axis=0) - b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False, ddof=1).reshape(p, p)
    cov_b = np.cov(b, rowvar=False, ddof=1).reshape(p, p)
    pooled = ((na - 1) * cov_a + (nb - 1) * cov_b) / (na + nb - 2)
    ridge = 1e-6 * np.trace(pooled) / p
    pooled = pooled + ridge * np.eye(p)

    if np.trace(pooled) == 0.0:
        if np.allclose(diff, 0.0):
            t2 = 0.0
            solved = None
        else:
            raise ValidationError("rank deficient: pooled covariance is zero")
    else:
        try:
            solved = sl.solve(pooled, diff, assume_a="pos")
        except (sl.LinAlgError, np.linalg.LinAlgError) as exc:
            raise ValidationError("rank deficient: pooled covariance not invertible") from exc
        t2 = float((na * nb / (na + nb)) * diff @ solved)

    t2 = max(t2, 0.0)
    f_stat = t2 * df2 / (p * (na + nb - 2))
    p_value = float(ss.f.sf(f_stat, p, df2))
    p_value = float(np.clip(p_value, 0.0, 1.0))
    return HotellingResult(t2=t2, f_statistic=float(f_stat), p_value=p_value,
                           reject=bool(p_value < alpha), alpha=float(alpha))


def meandiff_test(errors_e, errors_p, delta=0.1, alpha=0.05):
    """One-sided test that the absolute mean difference is within `delta`.

    statistic = (|mean_e - mean_p| - delta) / sqrt(var_e/n_e + var_p/n_p).
    Passing means the data support |mean difference| < delta at level alpha.
    A t reference is used when the smaller sample has <= 30 values, Z above.
    """
    e = np.asarray(errors_e, dtype=float)
    q = np.asarray(errors_p, dtype=float)
    if e.size == 0 or q.size == 0:
        raise ValidationError("meandiff_test needs non-empty samples")
    if not (np.isfinite(e).all() and np.isfinite(q).all()):
        raise ValidationError("meandiff_test inputs must be finite")
    ne, nq = e.size, q.size
    var_e = e.var(ddof=1) if ne > 1 else 0.0
    var_q = q.var(ddof=1) if nq > 1 else 0.0
    se = np.sqrt(var_e / ne + var_q / nq)
    gap = abs(e.mean() - q.mean())
    kind = "t" if min(ne, nq) <= 30 else "Z"

    if se == 0.0:
        statistic = float("-inf") if gap <= delta else float("inf")
        p_value = 0.0 if gap <= delta else 1.0
        return MeanDiffTestResult(statistic=statistic, p_value=p_value,
                                  test_kind=kind, passed=bool(gap <= delta))

    statistic = (gap - delta) / se
    if kind == "t":
        # Welch-Satterthwaite degrees of freedom
        num = (var_e / ne + var_q / nq) ** 2
        den = 0.0
        if ne > 1:
            den += (var_e / ne) ** 2 / (ne - 1)
        if nq > 1:
            den += (var_q / nq) ** 2 / (nq - 1)
        df = num / den if den > 0 else float(ne + nq - 2)
        p_value = float(ss.t.cdf(statistic, df))
    else:
        p_value = float(ss.norm.cdf(statistic))
    p_value = float(np.clip(p_value, 0.0, 1.0))
    return MeanDiffTestResult(statistic=float(statistic), p_value=p_value,
                              test_kind=kind, passed=bool(p_value < alpha))
