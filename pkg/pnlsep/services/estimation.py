"""
Separator estimation by minimizing the mutual information of the outputs.

The contrast is

    C(g, W) = sum_i H(y_i) - log|det W| - (1/T) sum_t sum_i log g_i'(x_i[t])

with marginal entropies from the m-spacing estimator. The constant H(x) is
left out, so contrast values compare only within one dataset.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import linalg
from scipy.stats import norm

from pnlsep.exceptions import (
    DegenerateDataError,
    InsufficientDataError,
    MonotonicityViolationError,
    RejectedInputError,
    SingularUnmixingError,
    StepFailureError,
)
from pnlsep.models.nonlinearity import (
    PROJECTION_MIN_SLOPE,
    Identity,
    MonotonePWL,
    Nonlinearity,
    project_increasing,
)
from pnlsep.models.pnl import Separator
from pnlsep.models.schemas import TraceRow, TrainConfig
from pnlsep.models.signals import DET_THRESHOLD, MixingMatrix, SignalBlock, SignalRole
from pnlsep.services.model_core import compensate, unmix

logger = structlog.get_logger(__name__)


MIN_SCORE_SAMPLES = 100
MIN_FIT_SAMPLES = 500
WHITENING_EIGEN_FLOOR = 1e-10
KDE_GRID_POINTS = 1024
KDE_CHUNK = 4096
GAP_FLOOR = np.finfo(np.float64).tiny
# Projection floor headroom so slopes survive the variance renormalization
PROJECTION_HEADROOM = 2.0
# Carried step sizes, relative to the configured initial step
STEP_GROWTH = 2.0
STEP_CEILING = 8.0
STEP_FLOOR = 1e-8


class ScoreEstimator(str, Enum):
    GRAM_CHARLIER = "gram_charlier"
    KERNEL = "kernel"
    SPACING = "spacing"


@dataclass(frozen=True)
class ContrastValue:
    """Contrast total (nats) with its three terms."""

    total: float
    marginal_entropy_sum: float
    log_det_w: float
    log_deriv_mean: float

    @classmethod
    def from_terms(cls, marginal_entropy_sum: float, log_det_w: float, log_deriv_mean: float) -> "ContrastValue":
        return cls(
            total=marginal_entropy_sum - log_det_w - log_deriv_mean,
            marginal_entropy_sum=marginal_entropy_sum,
            log_det_w=log_det_w,
            log_deriv_mean=log_deriv_mean,
        )


@dataclass(frozen=True)
class TrainingTrace:
    """Per-iteration contrast history of one fit."""

    rows: Tuple[TraceRow, ...]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1

    @property
    def totals(self) -> np.ndarray:
        return np.array([row.total for row in self.rows])


FitCallback = Callable[[int, Separator, ContrastValue], None]


# Preconditioning

def whiten(block: SignalBlock) -> Tuple[SignalBlock, np.ndarray, np.ndarray]:
    """
    Symmetric (ZCA) whitening of a block.

    Args:
        block: Block to whiten, any role; the role is kept

    Returns:
        Tuple of the whitened block, the whitening matrix V and the channel
        means mu, so that whitened = V (block - mu)

    Raises:
        InsufficientDataError: If there are not more samples than channels
        DegenerateDataError: If the sample covariance is singular
    """
    channels, samples = block.data.shape
    if samples <= channels:
        raise InsufficientDataError(f"whitening needs more samples than channels ({samples} <= {channels})")
    mean = block.data.mean(axis=1)
    centered = block.data - mean[:, None]
    covariance = centered @ centered.T / samples
    eigenvalues, eigenvectors = linalg.eigh(covariance)
    if eigenvalues.min() <= WHITENING_EIGEN_FLOOR:
        raise DegenerateDataError(
            f"sample covariance is singular (smallest eigenvalue {eigenvalues.min():.3e})"
        )
    whitening = eigenvectors @ np.diag(1.0 / np.sqrt(eigenvalues)) @ eigenvectors.T
    return SignalBlock(whitening @ centered, block.role), whitening, mean


# Entropy and score estimates

def spacing_window(samples: int) -> int:
    return max(1, int(math.isqrt(samples)))


def _spacing_gaps(sorted_values: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    index = np.arange(sorted_values.size)
    upper = np.minimum(index + m, sorted_values.size - 1)
    lower = np.maximum(index - m, 0)
    return sorted_values[upper] - sorted_values[lower], upper, lower


def spacing_entropy(values) -> float:
    """
    m-spacing (Vasicek) differential entropy estimate in nats, m = floor(sqrt(T)).

    Order statistics beyond the sample are clamped to the extremes.
    """
    values = np.asarray(values, dtype=np.float64)
    samples = values.size
    if samples < 2:
        raise InsufficientDataError("entropy estimate needs at least two samples")
    m = spacing_window(samples)
    gaps, _, _ = _spacing_gaps(np.sort(values, kind="stable"), m)
    return float(np.mean(np.log(samples / (2.0 * m) * np.maximum(gaps, GAP_FLOOR))))


def _gram_charlier_score(u: np.ndarray) -> np.ndarray:
    z = (u - u.mean()) / u.std()
    kappa3 = np.mean(z ** 3)
    kappa4 = np.mean(z ** 4) - 3.0
    return u - kappa3 / 2.0 * (u ** 2 - 1.0) - kappa4 / 6.0 * (u ** 3 - 3.0 * u)


def _kernel_score(u: np.ndarray) -> np.ndarray:
    # Gaussian KDE evaluated on a grid, -p'/p interpolated back to the samples
    bandwidth = 1.06 * u.std() * u.size ** (-0.2)
    grid = np.linspace(u.min() - 3.0 * bandwidth, u.max() + 3.0 * bandwidth, KDE_GRID_POINTS)
    density = np.zeros_like(grid)
    slope = np.zeros_like(grid)
    for start in range(0, u.size, KDE_CHUNK):
        offsets = (grid[:, None] - u[None, start:start + KDE_CHUNK]) / bandwidth
        kernel = np.exp(-0.5 * offsets ** 2)
        density += kernel.sum(axis=1)
        slope -= (offsets * kernel).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        score_grid = np.where(density > 0, -slope / (bandwidth * density), 0.0)
    return np.interp(u, grid, score_grid)


def _spacing_score(u: np.ndarray) -> np.ndarray:
    # T times the exact gradient of spacing_entropy with respect to each sample
    m = spacing_window(u.size)
    order = np.argsort(u, kind="stable")
    gaps, upper, lower = _spacing_gaps(u[order], m)
    with np.errstate(divide="ignore"):
        inverse_gaps = np.where(gaps > GAP_FLOOR, 1.0 / gaps, 0.0)
    sorted_score = (
        np.bincount(upper, weights=inverse_gaps, minlength=u.size)
        - np.bincount(lower, weights=inverse_gaps, minlength=u.size)
    )
    score = np.empty_like(u)
    score[order] = sorted_score
    return score


_SCORE_ESTIMATORS = {
    ScoreEstimator.GRAM_CHARLIER: _gram_charlier_score,
    ScoreEstimator.KERNEL: _kernel_score,
    ScoreEstimator.SPACING: _spacing_score,
}


def score_fn(channel, estimator="gram_charlier") -> np.ndarray:
    """
    Score psi(u) = -d/du log p(u) of one standardized channel.

    Args:
        channel: Samples of one output channel, standardized to unit variance
        estimator: gram_charlier, kernel or spacing

    Returns:
        np.ndarray: Score evaluated at every sample

    Raises:
        InsufficientDataError: With fewer than 100 samples
    """
    u = np.asarray(channel, dtype=np.float64)
    if u.ndim != 1:
        raise RejectedInputError("score_fn expects a single channel")
    if u.size < MIN_SCORE_SAMPLES:
        raise InsufficientDataError(f"score estimate needs at least {MIN_SCORE_SAMPLES} samples, got {u.size}")
    if not u.std() > 0:
        raise DegenerateDataError("cannot score a constant channel")
    return _SCORE_ESTIMATORS[ScoreEstimator(estimator)](u)


def channel_scores(outputs: SignalBlock, estimator="gram_charlier") -> np.ndarray:
    """
    Scores of every output channel in the outputs' own units.

    Each channel is standardized, scored, and the score rescaled by 1/sigma.
    """
    rows = []
    for y in outputs.data:
        sigma = y.std()
        if not sigma > 0:
            raise DegenerateDataError("cannot score a constant output channel")
        rows.append(score_fn((y - y.mean()) / sigma, estimator) / sigma)
    return np.vstack(rows)


# Contrast and its gradient

def _check_dimensions(separator: Separator, observations: SignalBlock):
    observations.require_role(SignalRole.OBSERVATION)
    if separator.channels != observations.channels:
        raise RejectedInputError(
            f"separator has {separator.channels} channels, observations have {observations.channels}"
        )


def _log_deriv_mean(compensators: Sequence[Nonlinearity], observations: SignalBlock) -> float:
    total = 0.0
    for i, g in enumerate(compensators):
        if isinstance(g, Identity):
            continue
        slopes = np.asarray(g.deriv(observations.channel(i)))
        if np.any(~(slopes > 0)):
            raise MonotonicityViolationError(f"compensator {i} has a non-positive derivative on the data")
        total += float(np.mean(np.log(slopes)))
    return total


def _evaluate(separator: Separator, observations: SignalBlock) -> Tuple[ContrastValue, SignalBlock]:
    if not abs(separator.unmixing.determinant) > DET_THRESHOLD:
        raise SingularUnmixingError("unmixing matrix is singular")
    outputs = unmix(separator.unmixing, compensate(separator.compensators, observations))
    value = ContrastValue.from_terms(
        marginal_entropy_sum=sum(spacing_entropy(y) for y in outputs.data),
        log_det_w=separator.unmixing.log_abs_det,
        log_deriv_mean=_log_deriv_mean(separator.compensators, observations),
    )
    return value, outputs


def contrast(separator: Separator, observations: SignalBlock) -> ContrastValue:
    """
    Mutual-information contrast of the separator's outputs on ``observations``.

    Raises:
        SingularUnmixingError: If |det W| < 1e-12
        MonotonicityViolationError: If some g_i' <= 0 on the data
    """
    _check_dimensions(separator, observations)
    value, _ = _evaluate(separator, observations)
    return value


def contrast_gradient(
    separator: Separator, observations: SignalBlock, scores: np.ndarray
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Gradient of the contrast with respect to W and every compensator parameter.

    The gradient is exact when ``scores`` come from the spacing estimator.

    Returns:
        Tuple of dC/dW and one dC/dtheta_i vector per compensator
    """
    _check_dimensions(separator, observations)
    compensated = compensate(separator.compensators, observations)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != compensated.data.shape:
        raise RejectedInputError(f"scores shape {scores.shape} does not match outputs {compensated.data.shape}")
    samples = observations.samples
    unmixing = separator.unmixing.entries
    grad_w = scores @ compensated.data.T / samples - np.linalg.inv(unmixing).T
    backpropagated = unmixing.T @ scores
    grad_params = []
    for i, g in enumerate(separator.compensators):
        if g.n_params == 0:
            grad_params.append(np.empty(0))
            continue
        x = observations.channel(i)
        value_term = g.param_grad(x) @ backpropagated[i] / samples
        log_term = (g.deriv_param_grad(x) / g.deriv(x)).sum(axis=-1) / samples
        grad_params.append(value_term - log_term)
    return grad_w, grad_params


# Updates

def natural_direction(unmixing: MixingMatrix, outputs: SignalBlock, scores: np.ndarray) -> np.ndarray:
    """Relative gradient direction (I - psi(Y) Y^T / T) W."""
    identity = np.eye(unmixing.size)
    return (identity - np.asarray(scores) @ outputs.data.T / outputs.samples) @ unmixing.entries


def w_update(
    unmixing: MixingMatrix,
    outputs: SignalBlock,
    scores: np.ndarray,
    step: float,
    step_halvings: int = 8,
) -> MixingMatrix:
    """
    One natural-gradient step on the unmixing matrix.

    Args:
        unmixing: Current W
        outputs: Outputs Y = W e produced by W
        scores: Per-channel scores of Y
        step: Initial step size
        step_halvings: Retries, each halving the step, while W_new is singular

    Returns:
        MixingMatrix: W + step * (I - psi(Y) Y^T / T) W

    Raises:
        StepFailureError: If every halving gives |det W_new| < 1e-12
    """
    outputs.require_role(SignalRole.OUTPUT)
    direction = natural_direction(unmixing, outputs, scores)
    current = step
    for _ in range(step_halvings + 1):
        candidate = unmixing.entries + current * direction
        if np.all(np.isfinite(candidate)) and abs(np.linalg.det(candidate)) > DET_THRESHOLD:
            return MixingMatrix(candidate)
        current /= 2.0
    raise StepFailureError(f"unmixing update stayed singular after {step_halvings} step halvings")


def normalize_compensators(separator: Separator, observations: SignalBlock) -> Separator:
    """
    Give every piecewise-linear compensator a zero-mean, unit-variance output.

    The affine change is absorbed into W (column scaling); the mean shift only
    offsets the outputs, which leaves the contrast unchanged.
    """
    compensated = compensate(separator.compensators, observations)
    compensators = list(separator.compensators)
    scales = np.ones(separator.channels)
    for i, g in enumerate(compensators):
        if not isinstance(g, MonotonePWL):
            continue
        e = compensated.channel(i)
        sigma = e.std()
        if not sigma > 0:
            raise DegenerateDataError(f"compensated channel {i} is constant")
        compensators[i] = g.affine(1.0 / sigma, -e.mean() / sigma)
        scales[i] = sigma
    unmixing = MixingMatrix(separator.unmixing.entries * scales[None, :])
    return Separator(compensators=tuple(compensators), unmixing=unmixing)


def g_update(separator: Separator, observations: SignalBlock, scores: np.ndarray, step: float) -> Separator:
    """
    One projected gradient step on the piecewise-linear compensators.

    Each trainable g_i moves against dC/dtheta_i, is projected back onto the
    increasing set, then renormalized to zero mean and unit variance on the
    training data with the affine change absorbed into W. Other families are
    left untouched.
    """
    _, grad_params = contrast_gradient(separator, observations, scores)
    compensators = list(separator.compensators)
    for i, (g, grad) in enumerate(zip(compensators, grad_params)):
        if not isinstance(g, MonotonePWL):
            continue
        # Two projections: the second floor scales with the spread of the
        # projected map, so slopes stay >= PROJECTION_MIN_SLOPE after renormalization
        stepped = project_increasing(g.knots, g.params - step * grad, PROJECTION_MIN_SLOPE)
        draft = MonotonePWL(knots=g.knots, values=stepped, domain=g.domain)
        spread = float(np.std(draft.eval(observations.channel(i))))
        floor = PROJECTION_MIN_SLOPE * PROJECTION_HEADROOM * max(1.0, spread)
        compensators[i] = g.with_params(stepped, min_slope=floor)
    return normalize_compensators(separator.replace(compensators=compensators), observations)


# Initialization

def gaussianize(observations: SignalBlock, n_knots: int = 17) -> List[MonotonePWL]:
    """
    Marginal Gaussianization: map empirical quantiles of each channel onto
    standard-normal quantiles at ``n_knots`` equal-probability knots.

    Raises:
        DegenerateDataError: If a channel has tied quantiles
    """
    probabilities = np.linspace(0.0, 1.0, n_knots)
    compensators = []
    for i, x in enumerate(observations.data):
        knots = np.quantile(x, probabilities)
        if np.any(np.diff(knots) <= 0):
            raise DegenerateDataError(f"observation channel {i} has tied quantiles")
        clipped = np.clip(probabilities, 0.5 / x.size, 1.0 - 0.5 / x.size)
        compensators.append(MonotonePWL(knots=knots, values=norm.ppf(clipped)))
    return compensators


# Alternating fit

def _descend(
    propose: Callable[[float], Separator],
    step: float,
    step_halvings: int,
    observations: SignalBlock,
    current: ContrastValue,
) -> Tuple[Optional[Tuple[Separator, ContrastValue, SignalBlock]], float]:
    """
    Halve the step until the contrast does not increase.

    Returns:
        Tuple of (candidate, value, outputs) or None when no halving worked,
        and the last step tried
    """
    for attempt in range(step_halvings + 1):
        if attempt:
            step /= 2.0
        try:
            candidate = propose(step)
            value, outputs = _evaluate(candidate, observations)
        except (StepFailureError, SingularUnmixingError):
            continue
        if np.isfinite(value.total) and value.total <= current.total:
            return (candidate, value, outputs), step
        logger.debug("step rejected", step=step, candidate=value.total, current=current.total)
    return None, step


@dataclass
class StepSize:
    """Step carried across outer iterations: grown on success, halved on failure."""

    initial: float
    value: float = 0.0

    def __post_init__(self):
        self.value = self.value or self.initial

    @property
    def collapsed(self) -> bool:
        return self.value < self.initial * STEP_FLOOR

    def accept(self, taken: float):
        self.value = min(taken * STEP_GROWTH, self.initial * STEP_CEILING)

    def reject(self, last_tried: float):
        self.value = max(last_tried / 2.0, self.initial * STEP_FLOOR / 2.0)


def _step_with_fallback(
    propose: Callable[[float, np.ndarray], Separator],
    outputs: SignalBlock,
    estimator: str,
    step: StepSize,
    config: TrainConfig,
    observations: SignalBlock,
    current: ContrastValue,
) -> Tuple[Optional[Tuple[Separator, ContrastValue, SignalBlock]], float]:
    # Smoothed scores only approximate the spacing gradient; when their
    # direction fails, retry along the exact gradient of the contrast
    estimators = [estimator] if estimator == ScoreEstimator.SPACING.value else [estimator, ScoreEstimator.SPACING.value]
    for name in estimators:
        scores = channel_scores(outputs, name)
        accepted, tried = _descend(
            lambda size: propose(size, scores), step.value, config.step_halvings, observations, current
        )
        if accepted is not None:
            step.accept(tried)
            return accepted, tried
    step.reject(tried)
    return None, 0.0


def _trace_row(iteration: int, value: ContrastValue, w_step: float, g_step: float) -> TraceRow:
    return TraceRow(
        iteration=iteration,
        total=value.total,
        entropy_sum=value.marginal_entropy_sum,
        log_det_w=value.log_det_w,
        log_deriv_mean=value.log_deriv_mean,
        w_step=w_step,
        g_step=g_step,
    )


def initial_separator(observations: SignalBlock, config: TrainConfig) -> Separator:
    """Gaussianized (or identity) compensators followed by whitening."""
    channels = observations.channels
    if config.train_compensators:
        separator = Separator(tuple(gaussianize(observations, config.n_knots)), MixingMatrix.identity(channels))
        separator = normalize_compensators(separator, observations)
    else:
        separator = Separator.identity(channels)
    _, whitening, _ = whiten(compensate(separator.compensators, observations))
    logger.debug("whitening done", condition=float(np.linalg.cond(whitening)))
    return separator.replace(unmixing=MixingMatrix(whitening))


def fit(
    observations: SignalBlock,
    config: TrainConfig,
    callback: Optional[FitCallback] = None,
) -> Tuple[Separator, TrainingTrace]:
    """
    Estimate a separator from observations alone.

    Each outer iteration takes a natural-gradient W step and then a
    compensator step. Step sizes carry over between iterations: an accepted
    step grows the next one, a rejected step halves it. A step is accepted
    only if the contrast does not increase; when the configured score
    estimator gives no such step, the exact spacing gradient is tried.

    The loop stops as converged once the improvement stays below
    ``converge_tol`` for ``patience`` consecutive iterations that either
    accepted a step or had every step collapse below its floor. Otherwise it
    stops after ``max_outer_iters``.

    Args:
        observations: Observation block (channels == sources), T >= 500
        config: Training configuration
        callback: Called as callback(iteration, separator, contrast) after every iteration

    Returns:
        Tuple of the fitted separator and its training trace

    Raises:
        InsufficientDataError: If T < 500
        DegenerateDataError: On constant channels or singular covariance
    """
    observations.require_role(SignalRole.OBSERVATION)
    if observations.samples < MIN_FIT_SAMPLES:
        raise InsufficientDataError(f"fit needs at least {MIN_FIT_SAMPLES} samples, got {observations.samples}")

    separator = initial_separator(observations, config)
    current, outputs = _evaluate(separator, observations)
    logger.info(
        "fit started",
        channels=observations.channels,
        samples=observations.samples,
        estimator=config.score_estimator,
        train_compensators=config.train_compensators,
        contrast=current.total,
    )
    rows = [_trace_row(0, current, 0.0, 0.0)]
    w_step = StepSize(config.w_step)
    g_step = StepSize(config.g_step)
    stalled = 0
    converged = False

    for iteration in range(1, config.max_outer_iters + 1):
        previous = current.total

        base = separator
        accepted, w_taken = _step_with_fallback(
            lambda size, scores: base.replace(
                unmixing=w_update(base.unmixing, outputs, scores, size, config.step_halvings)
            ),
            outputs,
            config.score_estimator,
            w_step,
            config,
            observations,
            current,
        )
        if accepted is not None:
            separator, current, outputs = accepted

        g_taken = 0.0
        if config.train_compensators:
            base = separator
            accepted, g_taken = _step_with_fallback(
                lambda size, scores: g_update(base, observations, scores, size),
                outputs,
                config.score_estimator,
                g_step,
                config,
                observations,
                current,
            )
            if accepted is not None:
                separator, current, outputs = accepted

        rows.append(_trace_row(iteration, current, w_taken, g_taken))
        logger.debug(
            "outer iteration",
            iteration=iteration,
            contrast=current.total,
            w_step=w_taken,
            g_step=g_taken,
            next_w_step=w_step.value,
            next_g_step=g_step.value,
        )
        if callback is not None:
            callback(iteration, separator, current)

        moved = w_taken > 0 or g_taken > 0
        collapsed = w_step.collapsed and (g_step.collapsed or not config.train_compensators)
        if previous - current.total >= config.converge_tol:
            stalled = 0
        elif moved or collapsed:
            stalled += 1
        if stalled >= config.patience:
            converged = True
            break

    trace = TrainingTrace(rows=tuple(rows), converged=converged)
    logger.info("fit finished", iterations=trace.iterations, converged=converged, contrast=current.total)
    return separator, trace
