"""Covariance kernels, linear observation functionals and GP conditioning.

Three kernels are provided: the Wiener kernel min(t, t') on [0, 1], the
Brownian bridge on an interval with pinned endpoint values, and the
squared-exponential kernel amp * exp(-||t - t'||^2 / lengthscale^2) in one
or two dimensions (the only kernel smooth enough to support Laplacian
observations).

Cross-covariance assembly for the SE kernel is the hot loop of the elliptic
design search; it is dispatched to a compiled extension when available, with
a numpy fallback selected at import (force the fallback by setting the
environment variable OPTINFO_NO_EXTENSION).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import SingularGram, UnsupportedFunctional
from .gaussian import DEFAULT_JITTER_SCALE, MAX_CONDITION, _spd_solve

try:
    if os.environ.get("OPTINFO_NO_EXTENSION"):
        raise ImportError("extension disabled by OPTINFO_NO_EXTENSION")
    from . import _kernels_cy as _backend
except ImportError:
    from . import _kernels_np as _backend

BACKEND = _backend.NAME

POINT = 0
NEG_LAPLACIAN = 1


@dataclass(frozen=True)
class PointEvaluation:
    """Observation of x(location)."""

    location: np.ndarray
    value: float = 0.0
    code = POINT

    def __post_init__(self):
        object.__setattr__(self, "location", np.atleast_1d(np.asarray(self.location, dtype=float)))


@dataclass(frozen=True)
class NegativeLaplacianEvaluation:
    """Observation of -Delta x(location); requires a twice-differentiable kernel."""

    location: np.ndarray
    value: float = 0.0
    code = NEG_LAPLACIAN

    def __post_init__(self):
        object.__setattr__(self, "location", np.atleast_1d(np.asarray(self.location, dtype=float)))


class Wiener:
    """Standard Wiener kernel k(t, t') = min(t, t') on [0, 1]."""

    dim = 1
    smooth = False

    def cross_cov(self, pts_a, codes_a, pts_b, codes_b):
        if np.any(np.asarray(codes_a)) or np.any(np.asarray(codes_b)):
            raise UnsupportedFunctional("Wiener kernel is not twice differentiable")
        ta = np.asarray(pts_a, dtype=float).reshape(-1)
        tb = np.asarray(pts_b, dtype=float).reshape(-1)
        return np.minimum.outer(ta, tb)

    def mean(self, pts):
        return np.zeros(np.asarray(pts, dtype=float).reshape(-1).shape[0])


class BrownianBridge:
    """Wiener process on [left, right] pinned to given endpoint values.

    Covariance (right - t')(t - left) / (right - left) for t <= t'; the mean
    interpolates the pinned values linearly.
    """

    dim = 1
    smooth = False

    def __init__(self, left: float, right: float, left_value: float = 0.0, right_value: float = 0.0):
        if not right > left:
            raise ValueError("require right > left")
        self.left = float(left)
        self.right = float(right)
        self.left_value = float(left_value)
        self.right_value = float(right_value)

    def cross_cov(self, pts_a, codes_a, pts_b, codes_b):
        if np.any(np.asarray(codes_a)) or np.any(np.asarray(codes_b)):
            raise UnsupportedFunctional("Brownian bridge is not twice differentiable")
        ta = np.asarray(pts_a, dtype=float).reshape(-1)
        tb = np.asarray(pts_b, dtype=float).reshape(-1)
        width = self.right - self.left
        lo = np.minimum.outer(ta, tb)
        hi = np.maximum.outer(ta, tb)
        return (self.right - hi) * (lo - self.left) / width

    def mean(self, pts):
        t = np.asarray(pts, dtype=float).reshape(-1)
        w = (t - self.left) / (self.right - self.left)
        return (1.0 - w) * self.left_value + w * self.right_value


class SquaredExponential:
    """k(t, t') = amplitude * exp(-||t - t'||^2 / lengthscale^2).

    The defaults reproduce the literal exp(-||t - t'||^2).
    """

    smooth = True

    def __init__(self, lengthscale: float = 1.0, amplitude: float = 1.0, dim: int = 2):
        if lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        self.lengthscale = float(lengthscale)
        self.amplitude = float(amplitude)
        self.dim = int(dim)

    @property
    def gamma(self) -> float:
        return 1.0 / self.lengthscale**2

    def cross_cov(self, pts_a, codes_a, pts_b, codes_b):
        pts_a = np.atleast_2d(np.asarray(pts_a, dtype=float))
        pts_b = np.atleast_2d(np.asarray(pts_b, dtype=float))
        return _backend.se_cross_cov(
            pts_a,
            np.asarray(codes_a, dtype=np.int64),
            pts_b,
            np.asarray(codes_b, dtype=np.int64),
            self.gamma,
            self.amplitude,
        )

    def mean(self, pts):
        return np.zeros(np.atleast_2d(np.asarray(pts, dtype=float)).shape[0])


def se_functional_covariances(lengthscale: float, t, t_prime):
    """Evaluate (k, Delta_t k, Delta_t Delta_t' k) for the SE kernel at (t, t').

    Closed forms for k = exp(-gamma r^2), gamma = 1/lengthscale^2, r = ||t - t'||,
    in d = len(t) dimensions:
        Delta_t k           = (4 g^2 r^2 - 2 d g) k
        Delta_t Delta_t' k  = (16 g^4 r^4 - 16 g^3 (d+2) r^2 + 4 g^2 d (d+2)) k
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    t_prime = np.atleast_1d(np.asarray(t_prime, dtype=float))
    d = t.shape[0]
    g = 1.0 / lengthscale**2
    r2 = float(np.sum((t - t_prime) ** 2))
    k = np.exp(-g * r2)
    lap = (4.0 * g**2 * r2 - 2.0 * d * g) * k
    double_lap = (
        16.0 * g**4 * r2**2 - 16.0 * g**3 * (d + 2) * r2 + 4.0 * g**2 * d * (d + 2)
    ) * k
    return k, lap, double_lap


def _split_obs(kernel, observations):
    if not observations:
        d = kernel.dim
        return np.zeros((0, d)), np.zeros(0, dtype=np.int64), np.zeros(0)
    pts = np.vstack([np.atleast_1d(o.location) for o in observations])
    codes = np.array([o.code for o in observations], dtype=np.int64)
    values = np.array([o.value for o in observations], dtype=float)
    if np.any(codes == NEG_LAPLACIAN) and not kernel.smooth:
        raise UnsupportedFunctional(
            "Laplacian observations require a twice-differentiable kernel"
        )
    # Reject coincident locations within a functional kind.
    for kind in np.unique(codes):
        sub = pts[codes == kind]
        if sub.shape[0] > 1:
            dists = np.linalg.norm(sub[:, None, :] - sub[None, :, :], axis=-1)
            np.fill_diagonal(dists, np.inf)
            if np.min(dists) == 0.0:
                raise SingularGram("observation locations must be pairwise distinct")
    return pts, codes, values


class ConditionedPredictor:
    """GP posterior predictor: mean and covariance over query points."""

    def __init__(self, kernel, observations, jitter: float | None = None):
        self.kernel = kernel
        self.observations = tuple(observations)
        pts, codes, values = _split_obs(kernel, observations)
        self._obs_pts = pts
        self._obs_codes = codes
        if pts.shape[0] == 0:
            self._weights = np.zeros(0)
            self._gram = np.zeros((0, 0))
            self.jitter = 0.0
            return
        gram = kernel.cross_cov(pts, codes, pts, codes)
        n = gram.shape[0]
        if jitter is None:
            jitter = DEFAULT_JITTER_SCALE * np.trace(gram) / n
        if jitter <= 0:
            raise ValueError("jitter must be positive")
        self.jitter = float(jitter)
        gram = gram + self.jitter * np.eye(n)
        if np.linalg.cond(gram) > MAX_CONDITION:
            raise SingularGram("Gram matrix condition number exceeds 1e12 after jitter")
        self._gram = gram
        prior_mean = kernel.mean(pts)
        self._weights = _spd_solve(gram, values - prior_mean)

    def _query(self, points):
        pts = np.asarray(points, dtype=float)
        if self.kernel.dim == 1:
            pts = pts.reshape(-1, 1)
        else:
            pts = np.atleast_2d(pts)
        return pts

    def mean(self, points) -> np.ndarray:
        pts = self._query(points)
        base = self.kernel.mean(pts)
        if self._obs_pts.shape[0] == 0:
            return base
        codes = np.zeros(pts.shape[0], dtype=np.int64)
        cross = self.kernel.cross_cov(pts, codes, self._obs_pts, self._obs_codes)
        return base + cross @ self._weights

    def cov(self, points) -> np.ndarray:
        pts = self._query(points)
        codes = np.zeros(pts.shape[0], dtype=np.int64)
        return self.cov_functionals(pts, codes)

    def cov_functionals(self, points, codes) -> np.ndarray:
        """Posterior covariance between arbitrary linear functionals
        (points with per-point functional codes)."""
        pts = self._query(points)
        codes = np.asarray(codes, dtype=np.int64)
        prior = self.kernel.cross_cov(pts, codes, pts, codes)
        if self._obs_pts.shape[0] == 0:
            return 0.5 * (prior + prior.T)
        cross = self.kernel.cross_cov(pts, codes, self._obs_pts, self._obs_codes)
        reduction = cross @ _spd_solve(self._gram, cross.T)
        out = prior - reduction
        return 0.5 * (out + out.T)

    def var(self, points) -> np.ndarray:
        return np.diag(self.cov(points)).copy()


def gp_condition(kernel, observations, jitter: float | None = None) -> ConditionedPredictor:
    """Condition ``kernel``'s GP on a list of linear observations."""
    return ConditionedPredictor(kernel, observations, jitter)
