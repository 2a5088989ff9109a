"""End-to-end two-stage pipelines for the Weibull model.

A training set pairs parameter draws with compressed simulations; the Bayes
fit minimizes the average squared loss over the rows (ridge regression) and
the minimax fit minimizes the worst row.  Either way the decision rule is
the composition of the quantile compression with a linear readout of the
scale/shape feature maps, one coefficient vector per parameter.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solvers
from .compression import (
    CompressedVector,
    FeatureKind,
    compress,
    feature_scale,
    feature_shape,
    scale_feature_len,
    shape_feature_len,
)
from .parallel import indexed_map
from .priors import PriorKind, PriorSpec, prior_inverse_cdf
from .rng import SeedSpec, stream
from .weibull import WeibullParams, weibull_quantile

METHOD_BAYES = "bayes"
METHOD_MINIMAX = "minimax"

# sub-stream tags under a TrainingConfig seed
THETA_STREAM = 0
TRAIN_DATA_STREAM = 1
EVAL_STREAM = 2
SCATTER_STREAM = 3

MODEL_FORMAT_VERSION = 1


def _default_distribution() -> PriorSpec:
    return PriorSpec(PriorKind.UNIFORM, 1.0, 20.0)


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs of the double Monte-Carlo training scheme.

    m_theta parameter draws, m_y datasets per draw, n_obs observations per
    dataset, compressed to n_quantiles values.  theta_distribution is the
    prior for the Bayes fit and doubles as the proposal for the minimax
    fit; its draws are applied independently to scale and shape.
    """

    m_theta: int = 1000
    m_y: int = 1
    n_obs: int = 10000
    n_quantiles: int = 10
    ridge: float = 1e-8
    theta_distribution: PriorSpec = field(default_factory=_default_distribution)
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))

    def __post_init__(self):
        if self.m_theta < 1:
            raise ValueError("m_theta must be >= 1")
        if self.m_y < 1:
            raise ValueError("m_y must be >= 1")
        if self.n_quantiles < 1:
            raise ValueError("n_quantiles must be >= 1")
        if self.n_quantiles >= self.n_obs:
            raise ValueError("n_quantiles must be smaller than n_obs")
        if not (math.isfinite(self.ridge) and self.ridge >= 0):
            raise ValueError("ridge must be a finite non-negative real")

    def fingerprint(self) -> str:
        """Stable digest of every field, for tagging fitted models."""
        payload = json.dumps(
            {
                "m_theta": self.m_theta,
                "m_y": self.m_y,
                "n_obs": self.n_obs,
                "n_quantiles": self.n_quantiles,
                "ridge": repr(self.ridge),
                "kind": self.theta_distribution.kind.value,
                "lower": repr(self.theta_distribution.lower),
                "upper": repr(self.theta_distribution.upper),
                "root_seed": self.seed.root_seed,
                "stream_index": self.seed.stream_index,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrainingSet:
    """Parameter draws and the compressed simulations they generated.

    Row i*m_y + j of ``alphas`` holds the quantiles of the j-th dataset
    simulated from thetas[i]; ``parent_index`` maps rows back to i.
    """

    thetas: np.ndarray  # (m_theta, 2) rows (scale_i, shape_i)
    alphas: np.ndarray  # (m_theta * m_y, n_quantiles)
    parent_index: np.ndarray  # (m_theta * m_y,)
    n_obs: int

    def compressed(self, row: int) -> CompressedVector:
        return CompressedVector(self.alphas[row])


def generate_training_set(config: TrainingConfig, workers: int | None = None) -> TrainingSet:
    """Draw parameters from the configured distribution and compress one
    simulated dataset per (draw, replicate).

    Deterministic given config.seed and independent of the worker schedule:
    every dataset has its own (i, j)-indexed sub-stream.
    """
    dist, seed = config.theta_distribution, config.seed
    m, my, n_obs, n_q = config.m_theta, config.m_y, config.n_obs, config.n_quantiles

    thetas = np.empty((m, 2))
    thetas[:, 0] = prior_inverse_cdf(stream(seed, THETA_STREAM, 0).random(m), dist)
    thetas[:, 1] = prior_inverse_cdf(stream(seed, THETA_STREAM, 1).random(m), dist)

    alphas = np.empty((m * my, n_q))
    parent = np.repeat(np.arange(m), my)

    def simulate_one(i: int) -> None:
        params = WeibullParams(thetas[i, 0], thetas[i, 1])
        for j in range(my):
            u = stream(seed, TRAIN_DATA_STREAM, i, j).random(n_obs)
            y = weibull_quantile(u, params)
            alphas[i * my + j] = compress(y, n_q).values

    indexed_map(simulate_one, m, workers)
    return TrainingSet(thetas=thetas, alphas=alphas, parent_index=parent, n_obs=n_obs)


@dataclass(frozen=True)
class TSModel:
    """A fitted two-stage decision rule: quantile compression composed with
    linear readouts over the scale and shape feature maps."""

    beta_scale: solvers.Coefficients
    beta_shape: solvers.Coefficients
    n_quantiles: int
    method: str
    config_fingerprint: str

    def __post_init__(self):
        if self.method not in (METHOD_BAYES, METHOD_MINIMAX):
            raise ValueError(f"unknown method {self.method!r}")
        if self.beta_scale.beta.size != scale_feature_len(self.n_quantiles):
            raise ValueError("scale coefficient length does not match n_quantiles")
        if self.beta_shape.beta.size != shape_feature_len(self.n_quantiles):
            raise ValueError("shape coefficient length does not match n_quantiles")


def build_feature_matrix(alphas: np.ndarray, kind: FeatureKind) -> np.ndarray:
    """Stack the chosen feature map over the rows of a quantile matrix."""
    builder = feature_scale if kind is FeatureKind.SCALE else feature_shape
    return np.vstack([builder(CompressedVector(row)).values for row in alphas])


def fit_from_training_set(
    training_set: TrainingSet,
    ridge: float,
    method: str,
    config_fingerprint: str = "",
    tolerance: float | None = None,
) -> TSModel:
    """Fit both parameter readouts on an existing training set."""
    targets = training_set.thetas[training_set.parent_index]

    coeffs = []
    for kind, column in ((FeatureKind.SCALE, 0), (FeatureKind.SHAPE, 1)):
        problem = solvers.RegressionProblem(
            features=build_feature_matrix(training_set.alphas, kind),
            targets=targets[:, column],
            ridge=ridge,
        )
        if method == METHOD_BAYES:
            coeffs.append(solvers.fit_ridge(problem))
        else:
            coeffs.append(solvers.fit_minimax(problem, tolerance))
    n_q = training_set.alphas.shape[1]
    return TSModel(
        beta_scale=coeffs[0],
        beta_shape=coeffs[1],
        n_quantiles=n_q,
        method=method,
        config_fingerprint=config_fingerprint,
    )


def fit_bayes(config: TrainingConfig, workers: int | None = None) -> TSModel:
    """Average-risk fit: ridge regression of each parameter on its features."""
    training_set = generate_training_set(config, workers)
    return fit_from_training_set(
        training_set, config.ridge, METHOD_BAYES, config.fingerprint()
    )


def fit_minimax(
    config: TrainingConfig,
    tolerance: float | None = None,
    workers: int | None = None,
) -> TSModel:
    """Worst-case fit: minimax regression of each parameter on its features.

    The configured distribution acts as the sampling proposal; the
    importance weights drop out of the solved program because the inner
    maximum over the simplex concentrates on the worst row.
    """
    training_set = generate_training_set(config, workers)
    return fit_from_training_set(
        training_set, config.ridge, METHOD_MINIMAX, config.fingerprint(), tolerance
    )


def estimate(model: TSModel, y) -> tuple[float, float]:
    """Apply the fitted rule to raw observations: compress, expand, read out.

    Returns (scale_estimate, shape_estimate); permutation-invariant in y.
    """
    y = np.asarray(y, dtype=float)
    if y.size <= model.n_quantiles:
        raise ValueError("need more observations than quantiles")
    alpha = compress(y, model.n_quantiles)
    eta_hat = float(model.beta_scale.beta @ feature_scale(alpha).values)
    gamma_hat = float(model.beta_shape.beta @ feature_shape(alpha).values)
    return eta_hat, gamma_hat


def save_model(model: TSModel, path) -> Path:
    """Write the flat text model format: key-value header, blank line, then
    one coefficient per line at 17 significant digits (bit-exact)."""
    path = Path(path)
    lines = [
        f"ts_model_version: {MODEL_FORMAT_VERSION}",
        f"method: {model.method}",
        f"n_quantiles: {model.n_quantiles}",
        f"config_fingerprint: {model.config_fingerprint}",
        f"scale_objective: {model.beta_scale.objective:.17g}",
        f"scale_certificate: {model.beta_scale.certificate:.17g}",
        f"shape_objective: {model.beta_shape.objective:.17g}",
        f"shape_certificate: {model.beta_shape.certificate:.17g}",
        f"scale_coefficients: {model.beta_scale.beta.size}",
        f"shape_coefficients: {model.beta_shape.beta.size}",
        "",
    ]
    lines.extend(f"{v:.17g}" for v in model.beta_scale.beta)
    lines.extend(f"{v:.17g}" for v in model.beta_shape.beta)
    path.write_text("\n".join(lines) + "\n")
    return path


def load_model(path) -> TSModel:
    """Read a model written by save_model."""
    text = Path(path).read_text()
    try:
        head, body = text.split("\n\n", 1)
    except ValueError:
        raise ValueError(f"{path}: missing header/coefficient separator") from None
    header: dict[str, str] = {}
    for line in head.splitlines():
        key, _, value = line.partition(":")
        if not _:
            raise ValueError(f"{path}: malformed header line {line!r}")
        header[key.strip()] = value.strip()
    if header.get("ts_model_version") != str(MODEL_FORMAT_VERSION):
        raise ValueError(f"{path}: unsupported model version")

    values = [float(tok) for tok in body.split()]
    n_scale = int(header["scale_coefficients"])
    n_shape = int(header["shape_coefficients"])
    if len(values) != n_scale + n_shape:
        raise ValueError(f"{path}: expected {n_scale + n_shape} coefficients")
    return TSModel(
        beta_scale=solvers.Coefficients(
            beta=np.array(values[:n_scale]),
            objective=float(header["scale_objective"]),
            certificate=float(header["scale_certificate"]),
        ),
        beta_shape=solvers.Coefficients(
            beta=np.array(values[n_scale:]),
            objective=float(header["shape_objective"]),
            certificate=float(header["shape_certificate"]),
        ),
        n_quantiles=int(header["n_quantiles"]),
        method=header["method"],
        config_fingerprint=header["config_fingerprint"],
    )
