"""Polynomial surrogates along a path and their effective degree.

A surrogate is the damped least-squares fit of sampled values y_i at path
abscissas a_i in an orthogonal basis of maximum degree K:

    (T^t T + eps I) c = T^t y,        T_ik = phi_k(2 a_i - 1).

Its effective degree weights each coefficient magnitude by its degree,

    ED = sum_k |c_k| k,        ED_norm = ED / sum_k |c_k|,

with ED_norm defined as 0 when every coefficient vanishes.  ED is piecewise
linear in c, which makes it differentiable in the sampled values y wherever
no coefficient sits at zero:

    dED/dy = T (T^t T + eps I)^{-1} (sign(c) * [0, 1, ..., K]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import design_matrix
from .sampling import PathAbscissas

__all__ = [
    "SingularFitError",
    "PolynomialSurrogate",
    "EDValue",
    "fit",
    "fit_matrix",
    "effective_degree",
    "ed_from_coefficients",
    "ed_vector",
    "mean_ed",
    "ed_gradient",
    "ed_gradient_matrix",
    "central_difference",
]

# Undamped fits refuse normal matrices worse conditioned than this.
COND_LIMIT = 1e12

# Post-solve residual guard, relative to the right-hand side scale.
_RESIDUAL_TOL = 1e-8


class SingularFitError(RuntimeError):
    """Undamped normal system is numerically singular or the solve failed."""


@dataclass(frozen=True)
class PolynomialSurrogate:
    """Fitted coefficients c_0..c_K in the stated basis with its damping."""

    basis: str
    max_degree: int
    coefficients: np.ndarray
    damping: float


@dataclass(frozen=True)
class EDValue:
    """Effective degree and its coefficient-mass-normalized companion."""

    ed: float
    ed_norm: float


def _alpha_array(alphas) -> np.ndarray:
    if isinstance(alphas, PathAbscissas):
        return alphas.alphas
    return np.asarray(alphas, dtype=float)


def _normal_solve(design: np.ndarray, rhs: np.ndarray, damping: float) -> np.ndarray:
    """Solve (T^t T + eps I) c = T^t rhs column-wise via a pivoted dense solve."""
    if damping < 0:
        raise ValueError("damping must be >= 0")
    gram = design.T @ design
    if damping > 0:
        gram = gram + damping * np.eye(gram.shape[0])
    else:
        if np.linalg.cond(gram) >= COND_LIMIT:
            raise SingularFitError(
                "normal matrix condition number exceeds COND_LIMIT with damping 0; "
                "increase damping or change the abscissas"
            )
    b = design.T @ rhs
    try:
        coeffs = np.linalg.solve(gram, b)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("normal system solve failed") from exc
    resid = np.abs(gram @ coeffs - b).max()
    if not resid < _RESIDUAL_TOL * (1.0 + np.abs(b).max()):
        raise SingularFitError(f"normal system residual {resid:.3e} above tolerance")
    return coeffs


def fit(
    alphas,
    values,
    max_degree: int,
    damping: float = 1e-6,
    basis: str = "chebyshev",
) -> PolynomialSurrogate:
    """Fit one scalar-valued path sample; values has one entry per abscissa."""
    a = _alpha_array(alphas)
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size != a.size:
        raise ValueError("values must be one-dimensional with one entry per abscissa")
    design = design_matrix(basis, a, max_degree)
    coeffs = _normal_solve(design, y, damping)
    return PolynomialSurrogate(
        basis=basis, max_degree=max_degree, coefficients=coeffs, damping=float(damping)
    )


def fit_matrix(
    alphas,
    values,
    max_degree: int,
    damping: float = 1e-6,
    basis: str = "chebyshev",
) -> np.ndarray:
    """Fit every column of an (r, m) value matrix at once; returns (K + 1, m) coefficients."""
    a = _alpha_array(alphas)
    y = np.asarray(values, dtype=float)
    if y.ndim != 2 or y.shape[0] != a.size:
        raise ValueError("values must be (r, m) with one row per abscissa")
    design = design_matrix(basis, a, max_degree)
    return _normal_solve(design, y, damping)


def ed_from_coefficients(coefficients: np.ndarray) -> EDValue:
    """Effective degree of a coefficient vector c_0..c_K."""
    c = np.abs(np.asarray(coefficients, dtype=float))
    if c.ndim != 1:
        raise ValueError("coefficients must be one-dimensional")
    degrees = np.arange(c.size, dtype=float)
    ed = float(c @ degrees)
    mass = float(c.sum())
    ed_norm = ed / mass if mass > 0.0 else 0.0
    return EDValue(ed=ed, ed_norm=ed_norm)


def effective_degree(surrogate: PolynomialSurrogate) -> EDValue:
    """Effective degree of a fitted surrogate."""
    return ed_from_coefficients(surrogate.coefficients)


def mean_ed(values) -> EDValue:
    """Arithmetic mean of EDValue entries, component-wise."""
    values = list(values)
    if not values:
        raise ValueError("need at least one value")
    return EDValue(
        ed=float(np.mean([v.ed for v in values])),
        ed_norm=float(np.mean([v.ed_norm for v in values])),
    )


def ed_vector(surrogates) -> EDValue:
    """Mean effective degree across the per-output surrogates of one path.

    All surrogates must share the same basis and maximum degree; mixing
    fits from different spaces would average incomparable quantities.
    """
    surrogates = list(surrogates)
    if not surrogates:
        raise ValueError("need at least one surrogate")
    kinds = {(s.basis, s.max_degree) for s in surrogates}
    if len(kinds) > 1:
        raise ValueError(f"surrogates disagree on (basis, max_degree): {sorted(kinds)}")
    return mean_ed(effective_degree(s) for s in surrogates)


def ed_gradient(
    alphas,
    values,
    max_degree: int,
    damping: float = 1e-6,
    basis: str = "chebyshev",
) -> np.ndarray:
    """Gradient of the unnormalized ED with respect to the sampled values.

    Uses the convention sign(0) = 0, matching the subgradient choice made by
    the training loop.  Only ED is differentiated; ED_norm is reported but
    never used as an objective.
    """
    return ed_gradient_matrix(
        alphas, np.asarray(values, dtype=float)[:, None], max_degree, damping, basis
    )[:, 0]


def ed_gradient_matrix(
    alphas,
    values,
    max_degree: int,
    damping: float = 1e-6,
    basis: str = "chebyshev",
) -> np.ndarray:
    """Column-wise ED gradients for an (r, m) value matrix; returns (r, m)."""
    a = _alpha_array(alphas)
    y = np.asarray(values, dtype=float)
    if y.ndim != 2 or y.shape[0] != a.size:
        raise ValueError("values must be (r, m) with one row per abscissa")
    design = design_matrix(basis, a, max_degree)
    coeffs = _normal_solve(design, y, damping)
    degrees = np.arange(max_degree + 1, dtype=float)
    weighted = np.sign(coeffs) * degrees[:, None]
    # The same damped normal matrix propagates the cotangent back to y.
    gram = design.T @ design + damping * np.eye(max_degree + 1)
    try:
        back = np.linalg.solve(gram, weighted)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("normal system solve failed") from exc
    return design @ back


def central_difference(f, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        bumped = x.copy()
        bumped[idx] = x[idx] + step
        hi = f(bumped)
        bumped[idx] = x[idx] - step
        lo = f(bumped)
        grad[idx] = (hi - lo) / (2.0 * step)
        it.iternext()
    return grad
