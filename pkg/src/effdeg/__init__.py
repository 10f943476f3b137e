"""Effective degree of black-box functions along interpolation paths.

The package fits low-order orthogonal-polynomial surrogates to a function
restricted to straight-line paths between data points and summarizes each
surrogate by a coefficient-weighted degree.  The measure is differentiable
in the sampled function values, so it doubles as a training regularizer.

Submodules
----------
basis      Chebyshev / Legendre recurrences and path design matrices.
sampling   Deterministic and randomized abscissa schemes on [0, 1].
surrogate  Damped least-squares fit, effective degree, analytic gradient.
reduce     Per-path PCA with deterministic sign and tie handling.
estimator  Dataset-level effective-degree estimation over random paths.
polylab    Exact rational polynomial algebra for degree bookkeeping.
net        Small dense networks, regularized training, square-activation study.
cli        Command-line entry points producing reproducible artifacts.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
