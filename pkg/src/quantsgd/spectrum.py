"""Problem instances: diagonal covariance spectra, targets, and data sampling.

Everything downstream works in the eigenbasis of the data covariance, so a
problem is fully described by a descending vector of eigenvalues, the target
vector expressed in that basis, and the label-noise variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def power_law_eigenvalues(d: int, a: float) -> np.ndarray:
    """Spectrum lambda_i = i**(-a) for i = 1..d, descending."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if a <= 0:
        raise ValueError(f"decay exponent must be positive, got {a}")
    return np.arange(1, d + 1, dtype=float) ** (-a)


def constant_target(d: int, value: float = 1.0) -> np.ndarray:
    return np.full(d, float(value))


@dataclass(frozen=True)
class ProblemSpec:
    """A Gaussian least-squares instance in the covariance eigenbasis.

    eigenvalues: descending, strictly positive, shape (d,)
    w_star:      optimum, shape (d,)
    noise_var:   variance of the additive label noise
    """

    eigenvalues: np.ndarray
    w_star: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        w = np.asarray(self.w_star, dtype=float)
        if lam.ndim != 1 or w.shape != lam.shape:
            raise ValueError("eigenvalues and w_star must be 1-d arrays of equal length")
        if not (lam > 0).all():
            raise ValueError("eigenvalues must be strictly positive")
        if (np.diff(lam) > 0).any():
            raise ValueError("eigenvalues must be sorted in descending order")
        if self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "w_star", w)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def signal_sq(self) -> float:
        """Squared H-norm of the optimum, sum_i lambda_i w*_i^2."""
        return float(self.eigenvalues @ (self.w_star**2))

    @property
    def label_second_moment(self) -> float:
        """E[y^2] = signal_sq + noise_var."""
        return self.signal_sq + self.noise_var


def make_power_law_problem(
    d: int, a: float, w_value: float = 1.0, noise_var: float = 0.0
) -> ProblemSpec:
    return ProblemSpec(power_law_eigenvalues(d, a), constant_target(d, w_value), noise_var)


def sample_batch(
    spec: ProblemSpec, batch: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a batch of (features, labels).

    Features are N(0, H) expressed in the eigenbasis; labels are
    y = <w*, x> + noise.  The stream is consumed in a fixed, documented
    order — features first, then label noise — so callers can reproduce a
    trajectory's data outside the engine from the same seed.
    """
    x = rng.standard_normal((batch, spec.dim)) * np.sqrt(spec.eigenvalues)
    y = x @ spec.w_star
    if spec.noise_var > 0:
        y = y + np.sqrt(spec.noise_var) * rng.standard_normal(batch)
    return x, y


def excess_risk(spec: ProblemSpec, w: np.ndarray) -> float | np.ndarray:
    """(1/2) ||w - w*||_H^2, vectorized over a leading axis if present."""
    diff = np.asarray(w, dtype=float) - spec.w_star
    out = 0.5 * (diff**2) @ spec.eigenvalues
    return float(out) if np.ndim(out) == 0 else out
