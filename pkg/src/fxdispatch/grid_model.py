"""Generator cost curves and the quadratic transmission-loss model.

Quadratic generation costs C_i(P_i) = c_i P_i^2 + b_i P_i + a_i and the
B-coefficient loss surface P_L = P'BP + B0'P + B00, together with every
first-order derivative the dispatch algorithm and its analysis need.
All powers are in MW, costs in $/h; B entries carry 1/MW so losses come
out in MW.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Raised when model data violates a structural invariant."""


class AssumptionViolation(ValueError):
    """Raised when data breaks one of the algorithm's standing assumptions."""


@dataclass(frozen=True)
class GeneratorSpec:
    """One generator: quadratic cost coefficients, initial power, demand share.

    a: cost offset ($/h); b: linear coefficient ($/MWh); c: quadratic
    coefficient ($/MW^2 h), must be positive; p0: initial power (MW);
    d0: this generator's share of the load demand (MW).
    """

    a: float
    b: float
    c: float
    p0: float = 0.0
    d0: float = 0.0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ConfigurationError(f"quadratic coefficient must be > 0, got c={self.c}")
        if self.p0 < 0:
            raise ConfigurationError(f"initial power must be >= 0, got p0={self.p0}")

    def cost(self, p: float) -> float:
        return self.c * p * p + self.b * p + self.a

    def marginal_cost(self, p: float) -> float:
        """dC/dP = 2cp + b, the generator's incremental cost in $/MWh."""
        return 2.0 * self.c * p + self.b

    def curvature(self, p: float) -> float:
        """d2C/dP2; constant 2c for a quadratic."""
        return 2.0 * self.c


@dataclass(frozen=True)
class CostSummary:
    """Convexity constants of a generator fleet.

    sigma: uniform lower bound on cost curvature; delta: uniform lower
    bound on marginal cost over nonnegative power.
    """

    sigma: float
    delta: float


class KronLossModel:
    """Quadratic loss surface with symmetric coefficient matrix B.

    The constant term B00 is attributed to individual generators with the
    uniform split B00/N; any split summing to B00 gives identical total
    losses and identical own-loss gradients, so the choice is
    observationally irrelevant to the dispatch algorithm.
    """

    def __init__(self, B, B0, B00: float):
        B = np.asarray(B, dtype=float)
        B0 = np.asarray(B0, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ConfigurationError(f"B must be square, got shape {B.shape}")
        n = B.shape[0]
        if B0.shape != (n,):
            raise ConfigurationError(f"B0 length {B0.shape} does not match B ({n}x{n})")
        bad = np.argwhere(B != B.T)
        if bad.size:
            i, j = bad[0]
            raise ConfigurationError(f"B is not symmetric at indices ({i},{j})")
        if (B < 0).any() or (B0 < 0).any():
            raise ConfigurationError("all entries of B and B0 must be >= 0")
        self.B = B
        self.B0 = B0
        self.B00 = float(B00)
        self.n = n

    def _check_len(self, P: np.ndarray) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if P.shape != (self.n,):
            raise ConfigurationError(f"power vector length {P.shape} != {self.n}")
        return P

    def total_loss(self, P) -> float:
        """P'BP + B0'P + B00, the network-wide transmission loss in MW."""
        P = self._check_len(P)
        return float(P @ self.B @ P + self.B0 @ P + self.B00)

    def generator_loss(self, P, i: int) -> float:
        """Loss attributed to generator i; sums to total_loss over i."""
        P = self._check_len(P)
        if not 0 <= i < self.n:
            raise IndexError(f"generator index {i} out of range 0..{self.n - 1}")
        return float(P[i] * (self.B[i] @ P) + P[i] * self.B0[i] + self.B00 / self.n)

    def generator_losses(self, P) -> np.ndarray:
        """Vector of per-generator losses (vectorized generator_loss)."""
        P = self._check_len(P)
        return P * (self.B @ P) + P * self.B0 + self.B00 / self.n

    def dloss_total_dPi(self, P, i: int) -> float:
        """Gradient of the total loss: 2 sum_j B_ij P_j + B_i0."""
        P = self._check_len(P)
        if not 0 <= i < self.n:
            raise IndexError(f"generator index {i} out of range 0..{self.n - 1}")
        return float(2.0 * (self.B[i] @ P) + self.B0[i])

    def dloss_own_dPi(self, P, i: int) -> float:
        """Gradient of generator i's own loss: sum_{j!=i} B_ij P_j + 2 B_ii P_i + B_i0."""
        P = self._check_len(P)
        if not 0 <= i < self.n:
            raise IndexError(f"generator index {i} out of range 0..{self.n - 1}")
        return float(self.B[i] @ P + self.B[i, i] * P[i] + self.B0[i])

    def total_loss_gradient(self, P) -> np.ndarray:
        """Vector of dloss_total_dPi."""
        P = self._check_len(P)
        return 2.0 * (self.B @ P) + self.B0

    def own_loss_gradient(self, P) -> np.ndarray:
        """Vector of dloss_own_dPi; 1 + this is the loss-augmentation factor H."""
        P = self._check_len(P)
        return self.B @ P + np.diag(self.B) * P + self.B0


def marginal_cost(gen: GeneratorSpec, p: float) -> float:
    return gen.marginal_cost(p)


def total_cost(gens, P) -> float:
    P = np.asarray(P, dtype=float)
    if len(gens) != P.shape[0]:
        raise ConfigurationError(f"{len(gens)} generators but {P.shape[0]} powers")
    a = np.array([g.a for g in gens])
    b = np.array([g.b for g in gens])
    c = np.array([g.c for g in gens])
    return float(np.sum(c * P * P + b * P + a))


def marginal_costs(gens, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    b = np.array([g.b for g in gens])
    c = np.array([g.c for g in gens])
    return 2.0 * c * P + b


def cost_summary(gens) -> CostSummary:
    """Extract (sigma, delta) = (2 min c_i, min b_i) from a fleet.

    delta = min b_i lower-bounds every marginal cost only on P >= 0; the
    simulator warns (but continues) if a transient drives powers negative.
    """
    if not gens:
        raise ConfigurationError("need at least one generator")
    sigma = 2.0 * min(g.c for g in gens)
    delta = min(g.b for g in gens)
    if delta == 0:
        raise AssumptionViolation("marginal-cost lower bound delta must be nonzero")
    return CostSummary(sigma=sigma, delta=delta)
