"""Pure-Python accumulation pass for shortest-path betweenness.

Fallback used when the compiled extension is unavailable.  Same contract as
``graphsom._speedups.brandes_csr``: raw ordered-pair dependencies (callers
halve for the undirected, unordered-pair convention).
"""

from collections import deque

import numpy as np


def brandes_csr(indptr, indices, n: int) -> np.ndarray:
    scores = np.zeros(n)
    for s in range(n):
        dist = [-1] * n
        sigma = [0.0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1.0
        order: list[int] = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in indices[indptr[v]:indptr[v + 1]]:
                w = int(w)
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                scores[w] += delta[w]
    return scores
