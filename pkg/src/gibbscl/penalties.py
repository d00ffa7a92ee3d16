"""Penalty values, derivatives, thresholding updates and adaptive weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

KIND_CODES = {
    "l1": _kernels.L1,
    "lasso": _kernels.L1,
    "l2": _kernels.L2,
    "ridge": _kernels.L2,
    "elastic_net": _kernels.ENET,
    "enet": _kernels.ENET,
    "scad": _kernels.SCAD,
    "mcp": _kernels.MCP,
}
CANONICAL = {"lasso": "l1", "ridge": "l2", "enet": "elastic_net"}
WEIGHT_CAP = 1e8


class PenaltyError(ValueError):
    """Raised for invalid penalty settings or arguments."""


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty kind at one ``lam`` with per-coefficient weights.

    ``weights[j] == 0`` marks an unpenalized coefficient. For the elastic net
    the weights scale only the l1 part.
    """

    kind: str = "l1"
    lam: float = 0.0
    mix: float = 0.5
    scad_gamma: float = 3.7
    mcp_gamma: float = 3.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        kind = CANONICAL.get(self.kind.lower(), self.kind.lower())
        object.__setattr__(self, "kind", kind)
        if kind not in KIND_CODES:
            raise PenaltyError(f"unknown penalty {self.kind!r}")
        if not self.lam >= 0:
            raise PenaltyError("lambda must be >= 0")
        if not 0.0 < self.mix < 1.0:
            raise PenaltyError("elastic-net mix must lie in (0, 1)")
        if not self.scad_gamma > 2.0:
            raise PenaltyError("SCAD gamma must exceed 2")
        if not self.mcp_gamma > 1.0:
            raise PenaltyError("MC+ gamma must exceed 1")
        if self.weights is not None:
            w = np.asarray(self.weights, float)
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise PenaltyError("penalty weights must be finite and >= 0")
            object.__setattr__(self, "weights", w)

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def shape(self) -> float:
        return self.scad_gamma if self.kind == "scad" else self.mcp_gamma

    @property
    def l1_fraction(self) -> float:
        """Share of the penalty slope at zero that is l1 (alpha in lambda_max)."""
        return self.mix if self.kind == "elastic_net" else 1.0

    @property
    def convex(self) -> bool:
        return self.kind in ("l1", "l2", "elastic_net")

    def at(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.kind, float(lam), self.mix, self.scad_gamma, self.mcp_gamma, self.weights)

    def with_weights(self, weights) -> "PenaltySpec":
        return PenaltySpec(self.kind, self.lam, self.mix, self.scad_gamma, self.mcp_gamma, weights)


def penalty_value(spec: PenaltySpec, theta: float) -> float:
    """p_lam(theta) for theta >= 0 (unit weight)."""
    if theta < 0:
        raise PenaltyError("penalty_value needs theta >= 0")
    return float(_kernels.penalty_scalar(spec.code, spec.lam, spec.shape, spec.mix, float(theta)))


def penalty_derivative(spec: PenaltySpec, theta: float) -> float:
    """Derivative of p_lam at theta > 0."""
    if not theta > 0:
        raise PenaltyError("penalty_derivative needs theta > 0")
    lam, g = spec.lam, spec.shape
    if spec.kind == "l1":
        return lam
    if spec.kind == "l2":
        return lam * theta
    if spec.kind == "elastic_net":
        return lam * (spec.mix + (1.0 - spec.mix) * theta)
    if spec.kind == "scad":
        if theta <= lam:
            return lam
        if theta <= g * lam:
            return (g * lam - theta) / (g - 1.0)
        return 0.0
    return max(0.0, lam - theta / g)


def weighted_penalty(spec: PenaltySpec, theta) -> float:
    """sum_j c_j p_lam(|theta_j|) over penalized j (elastic net: c_j scales the l1 part)."""
    theta = np.abs(np.asarray(theta, float))
    w = np.ones_like(theta) if spec.weights is None else spec.weights
    total = 0.0
    for c, t in zip(w, theta):
        if c == 0.0:
            continue
        if spec.kind == "elastic_net":
            total += spec.lam * (c * spec.mix * t + 0.5 * (1.0 - spec.mix) * t * t)
        else:
            total += c * _kernels.penalty_scalar(spec.code, spec.lam, spec.shape, spec.mix, t)
    return float(total)


def coordinate_update(z: float, w: float, spec: PenaltySpec, c: float = 1.0) -> float:
    """Global minimizer of 0.5*w*(theta - z)**2 + c*p_lam(|theta|); ties go to 0."""
    if not w > 0:
        raise PenaltyError("curvature w must be positive")
    return float(_kernels.threshold(spec.code, spec.lam, spec.shape, spec.mix, float(w), float(c), float(z)))


def adaptive_weights(pilot, penalized=None) -> np.ndarray:
    """1/|pilot| capped at 1e8 on penalized coordinates, 0 elsewhere."""
    pilot = np.abs(np.asarray(pilot, float))
    with np.errstate(divide="ignore"):
        w = np.minimum(1.0 / pilot, WEIGHT_CAP)
    if penalized is not None:
        w = np.where(np.asarray(penalized, bool), w, 0.0)
    return w
