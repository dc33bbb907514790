"""
:mod:`_kernels` -- pointwise nonlinear Gauss-Seidel compiled with ``numba``
============================================================================

Each node update solves the local equation exactly with all neighbor values
frozen. For one direction the second difference is affine in ``u(x)``,

    Delta_j = q_j * (m_j - u(x)),   q_j = wf + wb,   m_j = (wf*u_f + wb*u_b) / q_j,

so in 1D the update is ``m - g/q`` and in 2D each direction pair gives a
quadratic in ``u(x)`` whose relevant root is taken in a cancellation-free
form. The node value is the smallest root over all pairs.
"""
import numba as nb
import numpy as np

_numba_setting = {"nogil": True, "cache": True}


@nb.njit(**_numba_setting)
def _local_solve(i, u, g, neighbor, wf, wb, bvals, pairs):
    """New value of ``u[i]`` solving ``min_p prod_j max(Delta_j, 0) = g[i]``."""
    best = np.inf
    for p in range(pairs.shape[0]):
        if pairs.shape[1] == 1:
            j = pairs[p, 0]
            nf = neighbor[i, j, 0]
            nb_ = neighbor[i, j, 1]
            uf = u[nf] if nf >= 0 else bvals[i, j, 0]
            ub = u[nb_] if nb_ >= 0 else bvals[i, j, 1]
            q = wf[i, j] + wb[i, j]
            t = (wf[i, j] * uf + wb[i, j] * ub) / q - g[i] / q
        else:
            ja = pairs[p, 0]
            jb = pairs[p, 1]
            nf = neighbor[i, ja, 0]
            nb_ = neighbor[i, ja, 1]
            uf = u[nf] if nf >= 0 else bvals[i, ja, 0]
            ub = u[nb_] if nb_ >= 0 else bvals[i, ja, 1]
            qa = wf[i, ja] + wb[i, ja]
            ma = (wf[i, ja] * uf + wb[i, ja] * ub) / qa

            nf = neighbor[i, jb, 0]
            nb_ = neighbor[i, jb, 1]
            uf = u[nf] if nf >= 0 else bvals[i, jb, 0]
            ub = u[nb_] if nb_ >= 0 else bvals[i, jb, 1]
            qb = wf[i, jb] + wb[i, jb]
            mb = (wf[i, jb] * uf + wb[i, jb] * ub) / qb

            big_g = g[i] / (qa * qb)
            d = mb - ma
            root = np.sqrt(d * d + 4.0 * big_g)
            if d >= 0.0:
                s = 2.0 * big_g / (d + root) if d + root > 0.0 else 0.0
            else:
                s = 0.5 * (root - d)
            t = ma - s
        if t < best:
            best = t
    return best


@nb.njit(**_numba_setting)
def symmetric_sweeps(u, g, neighbor, wf, wb, bvals, pairs, n_sweeps):
    """Run ``n_sweeps`` symmetric sweeps (forward then backward node order) in place."""
    n = u.shape[0]
    for _ in range(n_sweeps):
        for i in range(n):
            u[i] = _local_solve(i, u, g, neighbor, wf, wb, bvals, pairs)
        for i in range(n - 1, -1, -1):
            u[i] = _local_solve(i, u, g, neighbor, wf, wb, bvals, pairs)
    return u
