"""Pseudo-likelihood and logistic composite likelihood with IRLS surrogates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureScheme

ETA_MAX = 700.0


class DivergenceError(FloatingPointError):
    """Raised when a linear predictor exceeds the overflow guard."""


class DegenerateWeightError(ValueError):
    """Raised when an IRLS working weight underflows to zero."""


@dataclass(frozen=True)
class ObjectiveEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None = None


def _eta(design: np.ndarray, theta) -> np.ndarray:
    eta = design @ np.asarray(theta, float)
    if eta.size and eta.max() > ETA_MAX:
        raise DivergenceError(f"linear predictor {eta.max():.1f} exceeds {ETA_MAX}")
    return eta


def lpl_eval(theta, scheme: QuadratureScheme, design: np.ndarray,
             hessian: bool = True) -> ObjectiveEval:
    """Quadrature log-pseudo-likelihood sum nu (y log lam - lam)."""
    t = np.asarray(design, float)
    eta = _eta(t, theta)
    lam = np.exp(eta)
    nu, y = scheme.weights, scheme.responses
    value = float(np.sum(nu * (y * eta - lam)))
    grad = t.T @ (nu * (y - lam))
    hess = -(t.T * (nu * lam)) @ t if hessian else None
    return ObjectiveEval(value, grad, hess)


def lcl_eval(theta, data_rows: np.ndarray, dummy_rows: np.ndarray, delta,
             hessian: bool = True) -> ObjectiveEval:
    """Logistic composite log-likelihood contrasting data with dummy points.

    ``delta`` is a scalar or one value per row of ``[data_rows; dummy_rows]``.
    """
    data_rows = np.asarray(data_rows, float)
    dummy_rows = np.asarray(dummy_rows, float)
    t = np.vstack([data_rows, dummy_rows])
    nd = len(data_rows)
    delta = np.broadcast_to(np.asarray(delta, float), (len(t),))
    if np.any(delta <= 0):
        raise ValueError("dummy intensities must be positive")
    eta = _eta(t, theta) - np.log(delta)
    # log(lam / (delta + lam)) = -log1p(exp(-eta)), log(delta / (delta + lam)) = -log1p(exp(eta))
    value = float(-np.logaddexp(0.0, -eta[:nd]).sum() - np.logaddexp(0.0, eta[nd:]).sum())
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    y = np.zeros(len(t))
    y[:nd] = 1.0
    grad = t.T @ (y - mu)
    hess = -(t.T * (mu * (1.0 - mu))) @ t if hessian else None
    return ObjectiveEval(value, grad, hess)


def irls_surrogate(theta, scheme: QuadratureScheme, design: np.ndarray,
                   kind: str = "pseudo") -> tuple[np.ndarray, np.ndarray]:
    """Working weights and responses of the quadratic surrogate at ``theta``.

    The surrogate is ``-0.5 * sum w (ystar - t^T theta)^2`` up to a constant;
    its gradient at ``theta`` equals the exact gradient.
    """
    t = np.asarray(design, float)
    eta = _eta(t, theta)
    if kind == "pseudo":
        lam = np.exp(eta)
        w = scheme.weights * lam
        with np.errstate(divide="ignore", invalid="ignore"):
            ystar = eta + (scheme.responses - lam) / lam
    elif kind == "logistic":
        off = eta - np.log(scheme.delta)
        mu = 0.5 * (1.0 + np.tanh(0.5 * off))
        w = mu * (1.0 - mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            ystar = eta + (scheme.is_data - mu) / w
    else:
        raise ValueError(f"unknown objective kind {kind!r}")
    if np.any(w <= 0):
        raise DegenerateWeightError("IRLS working weight underflowed to zero")
    return w, ystar


class CompositeProblem:
    """Design matrix plus scheme, with the objective kind fixed.

    ``kind`` defaults to ``"logistic"`` for logistic schemes and ``"pseudo"``
    otherwise.
    """

    def __init__(self, design: np.ndarray, scheme: QuadratureScheme, kind: str | None = None):
        self.design = np.asfortranarray(np.asarray(design, float))
        self.scheme = scheme
        self.kind = kind or ("logistic" if scheme.kind == "logistic" else "pseudo")
        if self.kind == "logistic" and scheme.delta is None:
            raise ValueError("logistic objective needs a logistic scheme")
        self.area = scheme.domain.area

    @property
    def p(self) -> int:
        return self.design.shape[1]

    def linear_predictor(self, theta) -> np.ndarray:
        return self.design @ np.asarray(theta, float)

    def evaluate(self, theta, hessian: bool = True) -> ObjectiveEval:
        if self.kind == "pseudo":
            return lpl_eval(theta, self.scheme, self.design, hessian)
        d = self.scheme.is_data
        return lcl_eval(theta, self.design[d], self.design[~d],
                        np.concatenate([self.scheme.delta[d], self.scheme.delta[~d]]), hessian)

    def value(self, theta) -> float:
        return self.evaluate(theta, hessian=False).value

    def surrogate(self, theta):
        return irls_surrogate(theta, self.scheme, self.design, self.kind)

    def intensity(self, theta) -> np.ndarray:
        return np.exp(np.minimum(self.linear_predictor(theta), ETA_MAX))
