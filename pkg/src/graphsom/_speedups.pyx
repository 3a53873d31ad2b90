# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Currently holds the shortest-path betweenness accumulation, which is the one
inner loop that is not expressible as BLAS calls.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def brandes_csr(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, Py_ssize_t n):
    """Raw ordered-pair dependency accumulation over all sources."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scores_arr = np.zeros(n)
    cdef double[::1] scores = scores_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dist_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] dist = dist_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sigma_arr = np.empty(n)
    cdef double[::1] sigma = sigma_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] delta_arr = np.empty(n)
    cdef double[::1] delta = delta_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] queue = queue_arr
    # Predecessor lists in CSR-like storage: at most one predecessor entry
    # per directed edge.
    cdef Py_ssize_t m = indices.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pred_arr = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] pred = pred_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pred_count_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] pred_count = pred_count_arr

    cdef Py_ssize_t s, v, w, k, q_head, q_tail, n_order, idx
    for s in range(n):
        for v in range(n):
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
            pred_count[v] = 0
        dist[s] = 0
        sigma[s] = 1.0
        q_head = 0
        q_tail = 0
        queue[q_tail] = s
        q_tail += 1
        n_order = 0
        while q_head < q_tail:
            v = queue[q_head]
            q_head += 1
            order[n_order] = v
            n_order += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[q_tail] = w
                    q_tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    # record v as predecessor of w, stored in w's CSR slot
                    pred[indptr[w] + pred_count[w]] = v
                    pred_count[w] += 1
        for idx in range(n_order - 1, -1, -1):
            w = order[idx]
            for k in range(indptr[w], indptr[w] + pred_count[w]):
                v = pred[k]
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                scores[w] += delta[w]
    return scores_arr
