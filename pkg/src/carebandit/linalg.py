"""Online ridge-regression state shared by the linear bandit policies.

The state tracks the regularized gram matrix ``B``, a maintained inverse
updated by the Sherman-Morrison identity, the reward-weighted feature
accumulator ``f`` and the coefficient estimate ``mu = Binv @ f``.  Hot
arithmetic is delegated to the kernel backend (compiled when available).
"""

import numpy as np

from ._kernels import quad_form, sm_update, ucb_scores
from .errors import ConfigurationError, NumericalError

# Rebuilding the inverse from B directly every so often bounds the
# floating-point drift accumulated by the rank-1 updates.
REINVERSION_INTERVAL = 1000


class RidgeState:
    """Incrementally updatable ridge estimator of a linear reward model.

    Parameters
    ----------
    d : int
        Feature dimension, at least 1.
    lam : float
        Ridge regularizer, strictly positive.  The gram matrix starts at
        ``lam * I`` which keeps it symmetric positive definite throughout.
    """

    __slots__ = ("d", "lam", "t", "B", "Binv", "f", "mu")

    def __init__(self, d, lam=1.0):
        if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {d!r}")
        lam = float(lam)
        if not lam > 0.0 or not np.isfinite(lam):
            raise ConfigurationError(f"ridge regularizer must be > 0, got {lam!r}")
        self.d = int(d)
        self.lam = lam
        self.t = 0
        self.B = np.eye(self.d) * lam
        self.Binv = np.eye(self.d) / lam
        self.f = np.zeros(self.d)
        self.mu = np.zeros(self.d)

    def _check_vector(self, b):
        b = np.ascontiguousarray(b, dtype=np.float64)
        if b.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {b.shape}")
        return b

    def update(self, b, r):
        """Absorb one (features, reward) observation.

        Non-finite inputs are rejected before any mutation, so the state
        is unchanged on error.
        """
        b = self._check_vector(b)
        r = float(r)
        if not np.isfinite(r) or not np.all(np.isfinite(b)):
            raise ValueError("non-finite update rejected; state unchanged")
        sm_update(self.B, self.Binv, self.f, self.mu, b, r)
        self.t += 1
        if self.t % REINVERSION_INTERVAL == 0:
            self.reinvert()

    def reinvert(self):
        """Recompute the inverse and coefficients from B directly."""
        try:
            Binv = np.linalg.inv(self.B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"gram matrix inversion failed: {exc}") from exc
        self.Binv = np.ascontiguousarray((Binv + Binv.T) / 2.0)
        self.mu = np.ascontiguousarray(self.Binv @ self.f)

    def confidence_width(self, b):
        """Return sqrt(b^T Binv b), the unscaled exploration width."""
        b = self._check_vector(b)
        return float(np.sqrt(max(quad_form(self.Binv, b), 0.0)))

    def predict(self, b):
        """Point estimate of the reward for features b."""
        b = self._check_vector(b)
        return float(b @ self.mu)

    def ucb_scores(self, phi, alpha):
        """Vector of ``phi[i] . mu + alpha * width(phi[i])`` over rows of phi."""
        phi = np.ascontiguousarray(phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != self.d:
            raise ValueError(f"expected an (n, {self.d}) matrix, got shape {phi.shape}")
        out = np.empty(phi.shape[0])
        ucb_scores(self.Binv, self.mu, phi, float(alpha), out)
        return out

    def sample_coefficients(self, v, rng):
        """Draw coefficients from N(mu, v^2 Binv).

        The draw is ``mu + v * L @ z`` with ``L L^T = Binv`` and ``z`` a
        vector of standard normals from ``rng``, so it is deterministic
        given the state and the generator's seed.
        """
        v = float(v)
        if not v > 0.0:
            raise ConfigurationError(f"posterior scale must be > 0, got {v!r}")
        try:
            L = np.linalg.cholesky(self.Binv)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"covariance factorization failed after {self.t} updates: {exc}"
            ) from exc
        z = rng.standard_normal(self.d)
        return self.mu + v * (L @ z)
