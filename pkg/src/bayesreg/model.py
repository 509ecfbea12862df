"""Marginal posterior over rigid transforms.

The observation model is a Gaussian mixture: each observed point ``Y_j``
was generated from one reference point ``X_i`` (correspondence prior
``pi_ij``) moved by the unknown transform and corrupted by isotropic
Gaussian noise of scale ``gamma``.  Summing the correspondence out gives
the marginal likelihood

    L(Y | X, theta) ~ prod_j sum_i pi_ij exp(-|Y_j - T(X_i; theta)|^2 / (2 gamma^2))

and the objective ("potential energy") sampled by the MCMC kernels is

    E(theta) = -log L(Y | X, theta) + lam * R(theta)

up to theta-independent normalization constants, which are dropped
throughout: energies are comparable only within a fixed (X, Y, gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from . import kernels
from .errors import InfeasibleAssignmentError, InvalidModelError
from .geometry import (PointSet, TransformParams, apply_transform,
                       canonicalize_params)

REG_NONE = "none"
REG_SQUARED_TRANSLATION = "squared_translation"
_REGULARIZERS = (REG_NONE, REG_SQUARED_TRANSLATION)

CLOSEST = "closest"
ASSIGNMENT = "assignment"


@dataclass(frozen=True)
class ModelSpec:
    """Noise scale, correspondence prior and transform regularizer.

    ``corr_prior`` has shape ``(N, M)`` with ``corr_prior[i, j]`` the prior
    probability that observation j corresponds to reference i; every column
    must sum to 1.  ``lam`` weights the regularizer ``R(theta)``; with
    ``lam = 0`` the prior over transforms is flat.
    """

    gamma: float
    corr_prior: np.ndarray
    lam: float = 0.0
    regularizer: str = REG_NONE

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        prior = np.asarray(self.corr_prior, dtype=float)
        if prior.ndim != 2:
            raise ValueError(f"corr_prior must be a 2-d matrix, got shape {prior.shape}")
        if np.any(prior < 0) or not np.all(np.isfinite(prior)):
            raise ValueError("corr_prior entries must be finite and non-negative")
        col_sums = prior.sum(axis=0)
        if np.any(np.abs(col_sums - 1.0) > 1e-9):
            raise ValueError("every corr_prior column must sum to 1 within 1e-9")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be non-negative, got {self.lam}")
        if self.regularizer not in _REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        object.__setattr__(self, "corr_prior", np.ascontiguousarray(prior))

    @classmethod
    def uniform(cls, n_reference: int, n_observation: int, gamma: float,
                lam: float = 0.0, regularizer: str = REG_NONE) -> "ModelSpec":
        """Spec with the exchangeable prior ``pi_ij = 1/N``."""
        prior = np.full((n_reference, n_observation), 1.0 / n_reference)
        return cls(gamma, prior, lam, regularizer)

    @property
    def n_reference(self) -> int:
        return self.corr_prior.shape[0]

    @property
    def n_observation(self) -> int:
        return self.corr_prior.shape[1]


def _log_corr_prior(spec: ModelSpec) -> np.ndarray:
    """log pi with zero entries mapped to -inf (excluded mixture terms)."""
    if np.any(spec.corr_prior.sum(axis=0) == 0.0):
        raise InvalidModelError("corr_prior has an all-zero column; no reference "
                                "can explain that observation")
    with np.errstate(divide="ignore"):
        return np.log(spec.corr_prior)


def _check_inputs(theta: TransformParams, X: PointSet, Y: PointSet,
                  spec: ModelSpec) -> None:
    if not (theta.dim == X.dim == Y.dim):
        raise ValueError(f"dimension mismatch: theta {theta.dim}, X {X.dim}, "
                         f"Y {Y.dim}")
    if spec.corr_prior.shape != (X.n, Y.n):
        raise ValueError(f"corr_prior shape {spec.corr_prior.shape} does not match "
                         f"N={X.n}, M={Y.n}")


class PosteriorTarget:
    """E(theta) and its gradient on raw parameter vectors.

    Binds the data arrays once so the samplers' inner loop does no
    per-evaluation validation or conversion.  Evaluations are pure; one
    instance may be shared across concurrently running chains.
    """

    __slots__ = ("dim", "n_angles", "n_params", "_X", "_Y", "_log_pi",
                 "_inv_two_gamma_sq", "_lam")

    def __init__(self, X: PointSet, Y: PointSet, spec: ModelSpec):
        if X.dim != Y.dim:
            raise ValueError(f"dimension mismatch: X {X.dim}, Y {Y.dim}")
        if spec.corr_prior.shape != (X.n, Y.n):
            raise ValueError(f"corr_prior shape {spec.corr_prior.shape} does not "
                             f"match N={X.n}, M={Y.n}")
        self.dim = X.dim
        self.n_angles = 1 if X.dim == 2 else 3
        self.n_params = self.n_angles + X.dim
        self._X = X.points
        self._Y = Y.points
        self._log_pi = _log_corr_prior(spec)
        self._inv_two_gamma_sq = 1.0 / (2.0 * spec.gamma * spec.gamma)
        self._lam = spec.lam if spec.regularizer == REG_SQUARED_TRANSLATION else 0.0

    def energy(self, vec: np.ndarray) -> float:
        e = kernels.mixture_energy(vec, self._X, self._Y, self._log_pi,
                                   self._inv_two_gamma_sq)
        if self._lam:
            t = vec[self.n_angles:]
            e += self._lam * float(t @ t)
        return e

    def energy_and_grad(self, vec: np.ndarray) -> tuple[float, np.ndarray]:
        e, g = kernels.mixture_energy_grad(vec, self._X, self._Y, self._log_pi,
                                           self._inv_two_gamma_sq)
        if self._lam:
            t = vec[self.n_angles:]
            e += self._lam * float(t @ t)
            g[self.n_angles:] += 2.0 * self._lam * t
        return e, g

    def grad(self, vec: np.ndarray) -> np.ndarray:
        return self.energy_and_grad(vec)[1]


def make_target(X: PointSet, Y: PointSet, spec: ModelSpec) -> PosteriorTarget:
    return PosteriorTarget(X, Y, spec)


def log_likelihood(theta: TransformParams, X: PointSet, Y: PointSet,
                   spec: ModelSpec) -> float:
    """Marginal log-likelihood (Gaussian normalization constant dropped)."""
    _check_inputs(theta, X, Y, spec)
    log_pi = _log_corr_prior(spec)
    inv2g2 = 1.0 / (2.0 * spec.gamma * spec.gamma)
    return -kernels.mixture_energy(theta.as_vector(), X.points, Y.points,
                                   log_pi, inv2g2)


def log_prior(theta: TransformParams, spec: ModelSpec) -> float:
    """Unnormalized log prior density, ``-lam * R(theta)``."""
    if spec.regularizer == REG_SQUARED_TRANSLATION and spec.lam > 0:
        t = theta.translation
        return -spec.lam * float(t @ t)
    return 0.0


def potential_energy(theta: TransformParams, X: PointSet, Y: PointSet,
                     spec: ModelSpec) -> float:
    """Negative unnormalized log posterior; its minimizer is the MAP."""
    return -log_likelihood(theta, X, Y, spec) - log_prior(theta, spec)


def grad_potential_energy(theta: TransformParams, X: PointSet, Y: PointSet,
                          spec: ModelSpec) -> np.ndarray:
    """Gradient of :func:`potential_energy`, ordered (angles..., translation...)."""
    _check_inputs(theta, X, Y, spec)
    return PosteriorTarget(X, Y, spec).energy_and_grad(theta.as_vector())[1]


def estimate_correspondence(theta_tilde: TransformParams, X: PointSet,
                            Y: PointSet, mode: str = CLOSEST) -> np.ndarray:
    """Binary correspondence matrix (N, M) recovered a posteriori.

    ``closest`` assigns each observation to its nearest transformed
    reference (ties to the smallest index); ``assignment`` computes the
    minimum-total-cost injective matching, which requires ``M <= N``.
    """
    if mode not in (CLOSEST, ASSIGNMENT):
        raise ValueError(f"unknown correspondence mode {mode!r}")
    if theta_tilde.dim != X.dim or X.dim != Y.dim:
        raise ValueError("dimension mismatch between transform and point sets")
    tx = apply_transform(theta_tilde, X).points
    d2 = cdist(tx.T, Y.points.T, "sqeuclidean")  # (N, M)
    corr = np.zeros(d2.shape, dtype=int)
    if mode == CLOSEST:
        corr[np.argmin(d2, axis=0), np.arange(Y.n)] = 1
    else:
        if Y.n > X.n:
            raise InfeasibleAssignmentError(
                f"assignment needs M <= N, got M={Y.n}, N={X.n}")
        obs_idx, ref_idx = linear_sum_assignment(d2.T)
        corr[ref_idx, obs_idx] = 1
    return corr


def _mean_param_vector(samples: np.ndarray, dim: int) -> TransformParams:
    """Arithmetic mean of translations, circular mean of angles."""
    n_ang = 1 if dim == 2 else 3
    ang = np.arctan2(np.sin(samples[:, :n_ang]).mean(axis=0),
                     np.cos(samples[:, :n_ang]).mean(axis=0))
    trans = samples[:, n_ang:].mean(axis=0)
    return canonicalize_params(TransformParams(dim, ang, trans))


def posterior_mean_from_chain(chain) -> TransformParams:
    """Posterior mean estimate from a (post burn-in) chain."""
    samples = np.asarray(chain.samples, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("cannot average an empty chain")
    return _mean_param_vector(samples, chain.dim)


def _descend(vec: np.ndarray, energy: float,
             target: PosteriorTarget, max_steps: int = 500,
             grad_tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Backtracking gradient descent; monotone in E by construction."""
    e, g = target.energy_and_grad(vec)
    step = 1.0
    for _ in range(max_steps):
        gnorm_sq = float(g @ g)
        if math.sqrt(gnorm_sq) < grad_tol:
            break
        step = min(step * 2.0, 1.0)
        moved = False
        while step > 1e-16:
            cand = vec - step * g
            e_cand = target.energy(cand)
            if e_cand <= e - 1e-4 * step * gnorm_sq:
                vec = cand
                e, g = target.energy_and_grad(cand)
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return vec, e


def map_from_chain(chain, X: PointSet, Y: PointSet, spec: ModelSpec,
                   polish: bool = True) -> TransformParams:
    """MAP estimate: the lowest-energy recorded sample, optionally polished.

    Polishing runs a deterministic gradient descent from that sample (at
    most 500 steps, stopping at ``|grad E| < 1e-8``); since the descent is
    monotone it can only lower the energy.
    """
    samples = np.asarray(chain.samples, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("cannot take the MAP of an empty chain")
    best = int(np.argmin(chain.energies))
    vec = samples[best].copy()
    if polish:
        target = PosteriorTarget(X, Y, spec)
        vec, _ = _descend(vec, float(chain.energies[best]), target)
    return canonicalize_params(TransformParams.from_vector(chain.dim, vec))
