"""Numpy implementations of the replay hot kernels.

Fallback backend used when the compiled extension is unavailable.  Both
backends share the same call signatures and operate in place on
C-contiguous float64 arrays; callers own allocation.
"""

import numpy as np


def sm_update(B, Binv, f, mu, b, r):
    """Rank-1 update of the ridge sufficient statistics.

    Applies B += b b^T, f += r b, the Sherman-Morrison update to Binv,
    and recomputes mu = Binv @ f.  All five arrays are modified in place.
    """
    u = Binv @ b
    denom = 1.0 + float(b @ u)
    Binv -= np.outer(u, u) / denom
    B += np.outer(b, b)
    f += r * b
    np.matmul(Binv, f, out=mu)


def quad_form(Binv, b):
    """Return the quadratic form b^T Binv b as a float."""
    return float(b @ (Binv @ b))


def ucb_scores(Binv, mu, phi, alpha, out):
    """Upper-confidence scores for a batch of feature rows.

    out[i] = phi[i] . mu + alpha * sqrt(max(phi[i]^T Binv phi[i], 0)).
    """
    np.matmul(phi, mu, out=out)
    q = np.einsum("ij,ij->i", phi @ Binv, phi)
    np.maximum(q, 0.0, out=q)
    out += alpha * np.sqrt(q)


def mean_scores(mu, phi, out):
    """Plain linear predictions: out[i] = phi[i] . mu."""
    np.matmul(phi, mu, out=out)
