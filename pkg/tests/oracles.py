"""Reference implementations that share no code with the package.

Each one is deliberately naive: slow but easy to check by eye.
"""

import itertools
import math

import numpy as np
from scipy import stats


def jacobi_eigh(M, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns eigenvalues in decreasing order and matching eigenvector columns.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(A[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta ** 2 + 1))
                c = 1 / math.sqrt(t ** 2 + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                V = V @ J
    vals = np.diag(A)
    order = np.argsort(vals)[::-1]
    return vals[order], V[:, order]


def normal_equations_2x2(Z, xi):
    """``(Z^T Z)^{-1} Z^T xi`` for two columns using the explicit 2x2 inverse."""
    a = sum(z[0] * z[0] for z in Z)
    b = sum(z[0] * z[1] for z in Z)
    d = sum(z[1] * z[1] for z in Z)
    r0 = sum(z[0] * x for z, x in zip(Z, xi))
    r1 = sum(z[1] * x for z, x in zip(Z, xi))
    det = a * d - b * b
    return np.array([(d * r0 - b * r1) / det, (-b * r0 + a * r1) / det])


def least_squares_with_intercept(x, y):
    """Simple linear regression ``y ~ w x + b`` by the textbook formulas."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    sxx = sum((xi - mx) ** 2 for xi in x)
    w = sxy / sxx
    return w, my - w * mx


def ari_pair_counting(a, b):
    """ARI by enumerating every pair of items (the Rand-index definition)."""
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    same_a = [a[i] == a[j] for i, j in pairs]
    same_b = [b[i] == b[j] for i, j in pairs]
    index = sum(x and y for x, y in zip(same_a, same_b))
    sa, sb, total = sum(same_a), sum(same_b), len(pairs)
    expected = sa * sb / total
    maximum = (sa + sb) / 2
    if maximum == expected:
        # both partitions trivial: equal iff both are all singletons or both one block
        return 1.0 if len(set(a)) == len(set(b)) else 0.0
    return (index - expected) / (maximum - expected)


def profile_likelihood_elbow(spectrum):
    """Split maximizing the two-segment Gaussian profile log-likelihood.

    Log-densities come from ``scipy.stats.norm`` with the pooled MLE
    standard deviation; ties resolve to the smaller split.
    """
    x = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    p = x.size
    best, best_q = -np.inf, None
    for q in range(1, p):
        head, tail = x[:q], x[q:]
        resid = np.concatenate([head - head.mean(), tail - tail.mean()])
        sd = math.sqrt(np.mean(resid ** 2))
        if sd == 0:
            ll = np.inf
        else:
            ll = (stats.norm.logpdf(head, head.mean(), sd).sum()
                  + stats.norm.logpdf(tail, tail.mean(), sd).sum())
        if ll > best + 1e-9 * max(1.0, abs(best)) if np.isfinite(best) else ll > best:
            best, best_q = ll, q
    return best_q


def nystrom_explicit(M, S, d):
    """``C A_S^+ C^T`` with ``A_S`` the rank-``d`` truncation of ``M[S, S]``.

    Uses the explicit pseudo-inverse; rows and columns come back in the
    original order.
    """
    M = np.asarray(M, dtype=float)
    S = list(S)
    C = M[:, S]
    W = M[np.ix_(S, S)]
    vals, vecs = np.linalg.eigh(W)
    top = np.argsort(vals)[::-1][:d]
    Wd = (vecs[:, top] * vals[top]) @ vecs[:, top].T
    return C @ np.linalg.pinv(Wd, rcond=1e-12, hermitian=True) @ C.T


def dirichlet_second_moment(alpha):
    """Closed form ``E[X X^T]`` for ``X ~ Dirichlet(alpha)``."""
    alpha = np.asarray(alpha, dtype=float)
    a0 = alpha.sum()
    outer = np.outer(alpha, alpha)
    return (outer + np.diag(alpha)) / (a0 * (a0 + 1))


def random_rotation(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))
