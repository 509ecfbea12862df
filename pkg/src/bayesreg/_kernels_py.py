"""NumPy implementation of the mixture-likelihood kernels.

This is the fallback backend; ``_kernels.pyx`` implements the same two
functions in C and must stay numerically interchangeable (see the parity
tests).  Both evaluate the data term of the registration objective,

    E_data(theta) = -sum_j log sum_i pi_ij exp(-|Y_j - R X_i - t|^2 / (2 gamma^2))

via a stabilized log-sum-exp, together with its gradient with respect to
``theta = (angles..., translation...)``.

Shapes: ``theta`` is ``(P,)``; ``X`` is ``(d, N)``; ``Y`` is ``(d, M)``;
``log_pi`` is ``(N, M)`` and may contain ``-inf`` for excluded pairs.
``inv_two_gamma_sq`` is the precomputed ``1 / (2 gamma^2)``.
"""

from __future__ import annotations

import numpy as np

from .geometry import rotation_derivatives, rotation_matrix_from_angles


def _scores(theta, X, Y, log_pi, inv_two_gamma_sq):
    d = X.shape[0]
    n_ang = 1 if d == 2 else 3
    rot = rotation_matrix_from_angles(theta[:n_ang], d)
    tx = rot @ X + theta[n_ang:, None]
    diff = Y[:, None, :] - tx[:, :, None]  # (d, N, M)
    dist2 = np.einsum("dnm,dnm->nm", diff, diff)
    return diff, log_pi - inv_two_gamma_sq * dist2


def mixture_energy(theta, X, Y, log_pi, inv_two_gamma_sq):
    """Data term of the objective (the negative marginal log-likelihood)."""
    _, s = _scores(theta, X, Y, log_pi, inv_two_gamma_sq)
    m = s.max(axis=0)
    lse = m + np.log(np.exp(s - m).sum(axis=0))
    return float(-lse.sum())


def mixture_energy_grad(theta, X, Y, log_pi, inv_two_gamma_sq):
    """Data term and its gradient, ordered (angles..., translation...)."""
    d = X.shape[0]
    n_ang = 1 if d == 2 else 3
    diff, s = _scores(theta, X, Y, log_pi, inv_two_gamma_sq)
    m = s.max(axis=0)
    lse = m + np.log(np.exp(s - m).sum(axis=0))
    w = np.exp(s - lse)  # softmax over references, (N, M)
    inv_gamma_sq = 2.0 * inv_two_gamma_sq
    grad_t = -inv_gamma_sq * np.einsum("nm,dnm->d", w, diff)
    dr = rotation_derivatives(theta[:n_ang], d)  # (n_ang, d, d)
    drx = np.einsum("kde,en->kdn", dr, X)
    grad_ang = -inv_gamma_sq * np.einsum("nm,kdn,dnm->k", w, drx, diff)
    return float(-lse.sum()), np.concatenate([grad_ang, grad_t])
