"""Dataset-level effective-degree estimation over random interpolation paths.

One estimate draws endpoint pairs from a dataset, walks the segment
x(a) = a x1 + (1 - a) x2 at the configured abscissas, fits per-output
surrogates to the sampled function values (optionally softmaxed, label
anchored, and PCA reduced), and averages the per-path effective degrees.

Randomness is splittable: path p derives its pair choices and abscissa seed
from SeedSequence(seed, spawn_key=(p, ...)), so any subset of paths can be
reproduced without replaying the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from . import surrogate as sg
from .basis import BASIS_KINDS
from .reduce import PathProjection, pca_project
from .sampling import SCHEME_VARIANTS, PathAbscissas, sample_abscissas

__all__ = [
    "FunctionOracle",
    "EstimatorConfig",
    "PathBatch",
    "PathResult",
    "EDReport",
    "PathSamplingError",
    "softmax",
    "path_values",
    "build_path",
    "anchor_values",
    "label_anchor",
    "path_ed",
    "ed_estimate",
]

# Endpoints closer than this give a collapsed segment; the pair is redrawn.
DEGENERATE_NORM = 1e-12
_MAX_REDRAWS = 16


class PathSamplingError(RuntimeError):
    """Every attempted endpoint pair was degenerate."""


@dataclass(frozen=True)
class FunctionOracle:
    """Vector-valued black box f: R^input_dim -> R^output_dim on batched rows."""

    input_dim: int
    output_dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "oracle"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.input_dim:
            raise ValueError(f"points must be (n, {self.input_dim})")
        out = np.asarray(self.fn(pts), dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (pts.shape[0], self.output_dim):
            raise ValueError(
                f"oracle {self.name!r} returned shape {out.shape}, "
                f"expected {(pts.shape[0], self.output_dim)}"
            )
        return out


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for one estimation run."""

    n_paths: int = 100
    resolution: int = 4
    max_degree: int = 3
    damping: float = 1e-6
    basis: str = "chebyshev"
    scheme: str = "randomized_cosine"
    pca_dim: int | None = None
    anchored: bool = False
    post_softmax: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.resolution < self.max_degree + 1:
            raise ValueError("resolution must be >= max_degree + 1")
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")
        if self.basis not in BASIS_KINDS:
            raise ValueError(f"basis must be one of {BASIS_KINDS}")
        if self.scheme not in SCHEME_VARIANTS:
            raise ValueError(f"scheme must be one of {SCHEME_VARIANTS}")
        if self.pca_dim is not None and self.pca_dim < 1:
            raise ValueError("pca_dim must be >= 1 when set")
        if self.anchored and self.resolution < 2:
            raise ValueError("anchoring requires resolution >= 2")

    def fingerprint(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PathBatch:
    """One interpolation path: endpoints, abscissas, and sampled values.

    values is (r, output_dim), row i evaluated at alphas[i].  anchored marks
    whether endpoint rows have been overwritten with labels.
    """

    x1: np.ndarray
    x2: np.ndarray
    abscissas: PathAbscissas
    values: np.ndarray
    anchored: bool = False


@dataclass(frozen=True)
class PathResult:
    """One path's endpoints, effective degree, and degeneracy notes."""

    index: int
    endpoint_indices: tuple[int, int]
    ed: float
    ed_norm: float
    pca_ties: bool


@dataclass(frozen=True)
class EDReport:
    """Aggregate of an estimation run.

    n_paths counts every attempted path, so n_paths = len(per_path) +
    n_skipped always holds.
    """

    mean_ed: float
    mean_ed_norm: float
    std_ed: float
    n_paths: int
    n_skipped: int
    per_path: tuple[PathResult, ...]
    config: dict = field(default_factory=dict)

    @property
    def tie_path_indices(self) -> tuple[int, ...]:
        return tuple(p.index for p in self.per_path if p.pca_ties)


def softmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Row-stable softmax."""
    z = np.asarray(values, dtype=float)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def path_values(
    oracle: FunctionOracle, x1: np.ndarray, x2: np.ndarray, abscissas: PathAbscissas
) -> np.ndarray:
    """Evaluate the oracle along a x1 + (1 - a) x2; a = 1 hits x1, a = 0 hits x2."""
    a = abscissas.alphas[:, None]
    points = a * np.asarray(x1, dtype=float) + (1.0 - a) * np.asarray(x2, dtype=float)
    return oracle.evaluate(points)


def build_path(
    oracle: FunctionOracle, x1: np.ndarray, x2: np.ndarray, abscissas: PathAbscissas
) -> PathBatch:
    """Evaluate the oracle along the segment and package the result."""
    return PathBatch(
        x1=np.asarray(x1, dtype=float),
        x2=np.asarray(x2, dtype=float),
        abscissas=abscissas,
        values=path_values(oracle, x1, x2, abscissas),
    )


def anchor_values(
    values: np.ndarray, abscissas: PathAbscissas, t1: np.ndarray, t2: np.ndarray
) -> np.ndarray:
    """Replace endpoint rows with labels: the a = 0 row gets t2, the a = 1 row t1.

    Requires abscissas that actually contain both endpoints (an anchored
    scheme); anchoring interior-only samples would mislabel the path.
    """
    if not abscissas.anchored:
        raise ValueError("label anchoring requires an anchored abscissa scheme")
    out = np.array(values, dtype=float, copy=True)
    out[0, :] = np.asarray(t2, dtype=float)
    out[-1, :] = np.asarray(t1, dtype=float)
    return out


def label_anchor(batch: PathBatch, t1: np.ndarray, t2: np.ndarray) -> PathBatch:
    """Pin the batch's endpoint rows to the endpoint labels (t1 at a=1)."""
    anchored = anchor_values(batch.values, batch.abscissas, t1, t2)
    return PathBatch(
        x1=batch.x1,
        x2=batch.x2,
        abscissas=batch.abscissas,
        values=anchored,
        anchored=True,
    )


def path_ed(
    values: np.ndarray,
    abscissas: PathAbscissas,
    config: EstimatorConfig,
    projection: PathProjection | None = None,
) -> tuple[sg.EDValue, bool]:
    """Effective degree of one path's (r, out) values; returns (value, pca tie flag).

    A caller may pass a precomputed projection to freeze the PCA map; by
    default the projection is fit to the given values.
    """
    ties = False
    fit_target = values
    if config.pca_dim is not None:
        if projection is None:
            projection = pca_project(values, config.pca_dim)
        fit_target = projection.apply(values)
        dead = projection.explained_variance < 1e-12
        if dead.any():
            fit_target = fit_target.copy()
            fit_target[:, dead] = 0.0
        ties = projection.degenerate_ties
    coeffs = sg.fit_matrix(
        abscissas, fit_target, config.max_degree, config.damping, config.basis
    )
    per_dim = [sg.ed_from_coefficients(coeffs[:, j]) for j in range(coeffs.shape[1])]
    return sg.mean_ed(per_dim), ties


def path_ed_with_gradient(
    values: np.ndarray,
    abscissas: PathAbscissas,
    config: EstimatorConfig,
    projection: PathProjection | None = None,
) -> tuple[sg.EDValue, np.ndarray, bool]:
    """Per-path ED plus its gradient in the (r, out) values.

    The PCA projection, when used, is differentiated as a fixed linear map:
    the mean and components are constants of the path.  Dead (zeroed)
    components contribute nothing, since their fitted coefficients vanish and
    sign(0) = 0.  Callers that anchor endpoint rows must zero those gradient
    rows themselves, because anchored rows are labels, not function values.
    """
    values = np.asarray(values, dtype=float)
    ties = False
    fit_target = values
    if config.pca_dim is not None:
        if projection is None:
            projection = pca_project(values, config.pca_dim)
        fit_target = projection.apply(values)
        dead = projection.explained_variance < 1e-12
        if dead.any():
            fit_target = fit_target.copy()
            fit_target[:, dead] = 0.0
        ties = projection.degenerate_ties
    coeffs = sg.fit_matrix(
        abscissas, fit_target, config.max_degree, config.damping, config.basis
    )
    per_dim = [sg.ed_from_coefficients(coeffs[:, j]) for j in range(coeffs.shape[1])]
    value = sg.mean_ed(per_dim)
    grad_fit = sg.ed_gradient_matrix(
        abscissas, fit_target, config.max_degree, config.damping, config.basis
    ) / fit_target.shape[1]
    if config.pca_dim is not None:
        grad = grad_fit @ projection.components
    else:
        grad = grad_fit
    return value, grad, ties


def _draw_pair(
    rng: np.random.Generator, inputs: np.ndarray
) -> tuple[int, int] | None:
    n = inputs.shape[0]
    for _ in range(_MAX_REDRAWS):
        i, j = (int(v) for v in rng.integers(0, n, size=2))
        if i == j:
            continue
        if np.linalg.norm(inputs[i] - inputs[j]) > DEGENERATE_NORM:
            return i, j
    return None


def ed_estimate(
    oracle: FunctionOracle,
    inputs: np.ndarray,
    config: EstimatorConfig,
    labels: np.ndarray | None = None,
) -> EDReport:
    """Estimate the mean effective degree of an oracle over a dataset.

    inputs is (n, input_dim) with n >= 2.  When config.anchored is set,
    labels must be (n, output_dim); endpoint rows of each path are replaced
    by the labels of the endpoints before any PCA or fitting.
    """
    config.validate()
    X = np.asarray(inputs, dtype=float)
    if X.ndim != 2 or X.shape[1] != oracle.input_dim:
        raise ValueError(f"inputs must be (n, {oracle.input_dim})")
    if X.shape[0] < 2:
        raise ValueError("need at least two dataset points to form a path")
    if config.anchored:
        if labels is None:
            raise ValueError("anchored estimation requires labels")
        labels = np.asarray(labels, dtype=float)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.shape != (X.shape[0], oracle.output_dim):
            raise ValueError(f"labels must be (n, {oracle.output_dim})")
    if config.pca_dim is not None and config.pca_dim > min(
        config.resolution, oracle.output_dim
    ):
        raise ValueError("pca_dim exceeds min(resolution, output_dim)")

    results: list[PathResult] = []
    n_skipped = 0
    for p in range(config.n_paths):
        pair_rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(p, 0)))
        )
        pair = _draw_pair(pair_rng, X)
        if pair is None:
            n_skipped += 1
            continue
        i, j = pair
        abscissa_seed = int(
            np.random.SeedSequence(config.seed, spawn_key=(p, 1)).generate_state(
                1, np.uint64
            )[0]
        )
        abscissas = sample_abscissas(
            config.scheme, config.resolution, anchored=config.anchored, seed=abscissa_seed
        )
        batch = build_path(oracle, X[i], X[j], abscissas)
        if config.post_softmax:
            batch = PathBatch(
                x1=batch.x1,
                x2=batch.x2,
                abscissas=abscissas,
                values=softmax(batch.values, axis=1),
            )
        if config.anchored:
            batch = label_anchor(batch, labels[i], labels[j])
        ed_val, ties = path_ed(batch.values, abscissas, config)
        results.append(
            PathResult(
                index=p,
                endpoint_indices=(i, j),
                ed=ed_val.ed,
                ed_norm=ed_val.ed_norm,
                pca_ties=ties,
            )
        )

    if not results:
        raise PathSamplingError(
            "all sampled endpoint pairs were degenerate; the dataset has no spread"
        )
    eds = np.array([r.ed for r in results])
    norms = np.array([r.ed_norm for r in results])
    std = float(eds.std(ddof=1)) if eds.size > 1 else 0.0
    return EDReport(
        mean_ed=float(eds.mean()),
        mean_ed_norm=float(norms.mean()),
        std_ed=std,
        n_paths=len(results) + n_skipped,
        n_skipped=n_skipped,
        per_path=tuple(results),
        config=config.fingerprint(),
    )
