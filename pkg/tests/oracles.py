"""Independent reference computations used by the tests.

Nothing here imports the code under test beyond plain data types; every
routine takes the slow, obvious route.
"""

import math

import numpy as np


def se_kernel(a, b, lengthscale):
    a, b = np.atleast_1d(a).astype(float), np.atleast_1d(b).astype(float)
    return math.exp(-float(np.sum((a - b) ** 2)) / (2 * lengthscale**2))


def kernel_matrix(xs, ys, kfun):
    return np.array([[kfun(x, y) for y in ys] for x in xs])


def dense_posterior(xs, ys, queries, lam, kfun):
    """Posterior mean/std by solving the full linear systems from scratch."""
    if len(xs) == 0:
        return np.zeros(len(queries)), np.ones(len(queries))
    K = kernel_matrix(xs, xs, kfun) + lam * np.eye(len(xs))
    kq = kernel_matrix(xs, queries, kfun)
    mu = kq.T @ np.linalg.solve(K, np.asarray(ys, dtype=float))
    var = np.array([kfun(q, q) for q in queries]) - np.einsum("ij,ij->j", kq, np.linalg.solve(K, kq))
    return mu, np.sqrt(np.clip(var, 0.0, None))


def logdet_info_gain(xs, lam, kfun):
    if len(xs) == 0:
        return 0.0
    K = kernel_matrix(xs, xs, kfun)
    sign, logdet = np.linalg.slogdet(np.eye(len(xs)) + K / lam)
    assert sign > 0
    return 0.5 * logdet


def brute_metropolis(n, edges):
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    w = [[0.0] * n for _ in range(n)]
    for i, j in edges:
        w[i][j] = w[j][i] = 1.0 / (1 + max(deg[i], deg[j]))
    for i in range(n):
        w[i][i] = 1.0 - sum(w[i][j] for j in range(n) if j != i)
    return np.array(w)


def bfs_connected(n, edges):
    adj = {i: set() for i in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for u in adj[v] - seen:
            seen.add(u)
            stack.append(u)
    return len(seen) == n
