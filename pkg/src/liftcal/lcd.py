"""Loss-ratio model scoring and ranking.

A model's predictions are "lifted" through a two-parameter generalised
linear adjustment (intercept + slope on the link scale) fitted on the
calibration set. The score

    1 - (lifted model loss) / (null model loss)

always lands in [0, 1] for the convex losses used here, so arbitrary
models become directly comparable: 0 means no improvement over the
no-dependence baseline, 1 means a perfect fit. The same module houses the
loss-plus-complexity criterion generalising AIC/BIC, its softmax model
probabilities, and committee (convex-mixture) predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import special

from .errors import (
    BoundaryNullError,
    InvalidInputError,
    InvalidParameterError,
    ShapeMismatchError,
    UndefinedLcdError,
)
from .lifted import CalibrationSet

__all__ = [
    "Link",
    "NullKind",
    "GlmFit",
    "LcdReport",
    "MicScore",
    "fit_lifted_glm",
    "null_loss",
    "lcd",
    "raw_model_loss",
    "exp_loss_lcd",
    "rank_models",
    "mic",
    "mic_probabilities",
    "committee_predict",
]

PROB_CLIP = 1e-12  # logit-link predictions are clipped to [eps, 1 - eps]
LINPRED_CAP = 30.0  # linear-predictor cap guarding perfect separation
_GRAD_STOP = 1e-10
_GRAD_CONVERGED = 1e-8
_MAX_ITER = 100


class Link(str, Enum):
    IDENTITY = "identity"
    LOGIT = "logit"
    LOG = "log"


class NullKind(str, Enum):
    UNIFORM_BINARY = "uniform"
    INTERCEPT_MLE = "intercept"


@dataclass(frozen=True)
class GlmFit:
    """Optimum of the two-parameter lifted loss."""

    beta0: float
    beta1: float
    loss: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class LcdReport:
    """Loss-ratio score for one model; ``lcd`` is None when scoring failed."""

    model_id: str
    lcd: float | None
    model_loss: float
    null_loss: float
    lift: GlmFit | None
    error: str | None = None


@dataclass(frozen=True)
class MicScore:
    """Loss-plus-complexity criterion value for one model."""

    model_id: str
    loss: float
    complexity: float
    mic: float


class _LinkLoss:
    """Per-link covariate transform, loss, gradient and Hessian.

    The covariate is the link transform of the raw predictions, so the
    parameters (0, 1) reproduce the unadjusted model exactly.
    """

    def __init__(self, calib: CalibrationSet, link: Link):
        y = calib.responses
        f = calib.predictions
        self.link = link
        self.y = y
        if link is Link.IDENTITY:
            self.x = f
        elif link is Link.LOGIT:
            if np.any((y != 0.0) & (y != 1.0)):
                raise InvalidInputError("logit link needs responses in {0, 1}")
            if np.any(f < 0.0) or np.any(f > 1.0):
                raise InvalidInputError("logit link needs predictions in [0, 1]")
            p = np.clip(f, PROB_CLIP, 1.0 - PROB_CLIP)
            self.x = np.log(p) - np.log1p(-p)
        elif link is Link.LOG:
            if np.any(y < 0.0) or np.any(y != np.floor(y)):
                raise InvalidInputError("log link needs nonnegative integer responses")
            if np.any(f <= 0.0):
                raise InvalidInputError("log link needs strictly positive predictions")
            self.x = np.log(f)
            self._gammaln_y = float(special.gammaln(y + 1.0).sum())
        else:  # pragma: no cover
            raise InvalidParameterError(f"unknown link {link!r}")

    def _psi(self, b0: float, b1: float):
        psi = b0 + b1 * self.x
        if self.link is Link.IDENTITY:
            return psi, np.zeros(psi.shape, dtype=bool)
        capped = np.abs(psi) > LINPRED_CAP
        return np.clip(psi, -LINPRED_CAP, LINPRED_CAP), capped

    def loss(self, b0: float, b1: float) -> float:
        psi, _ = self._psi(b0, b1)
        y = self.y
        if self.link is Link.IDENTITY:
            r = y - psi
            return float(r @ r)
        if self.link is Link.LOGIT:
            # softplus(psi) - y*psi, stable for any psi
            sp = np.logaddexp(0.0, psi)
            return float(np.sum(sp - y * psi))
        m = np.exp(psi)
        return float(np.sum(m - y * psi)) + self._gammaln_y

    def grad_hess(self, b0: float, b1: float):
        psi, capped = self._psi(b0, b1)
        y, x = self.y, self.x
        if self.link is Link.IDENTITY:
            r = y - psi
            g = np.array([-2.0 * r.sum(), -2.0 * (r @ x)])
            sx, sxx = x.sum(), float(x @ x)
            h = 2.0 * np.array([[len(x), sx], [sx, sxx]])
            return g, h
        if self.link is Link.LOGIT:
            p = special.expit(psi)
            d1 = np.where(capped, 0.0, p - y)
            d2 = np.where(capped, 0.0, p * (1.0 - p))
        else:
            m = np.exp(psi)
            d1 = np.where(capped, 0.0, m - y)
            d2 = np.where(capped, 0.0, m)
        g = np.array([d1.sum(), d1 @ x])
        h = np.array([[d2.sum(), d2 @ x], [d2 @ x, d2 @ (x * x)]])
        return g, h

    def any_capped(self, b0: float, b1: float) -> bool:
        _, capped = self._psi(b0, b1)
        return bool(capped.any())

    def null_params(self, null_kind: NullKind) -> tuple[float, float]:
        """Parameter vector whose loss is the null-model loss."""
        y = self.y
        if null_kind is NullKind.UNIFORM_BINARY:
            if self.link is not Link.LOGIT:
                raise InvalidParameterError("the uniform-binary null applies to the logit link only")
            return 0.0, 0.0
        ybar = float(y.mean())
        if self.link is Link.IDENTITY:
            return ybar, 0.0
        if self.link is Link.LOGIT:
            if ybar <= 0.0 or ybar >= 1.0:
                raise BoundaryNullError(
                    "intercept MLE sits on the boundary for single-class labels; use the uniform-binary null"
                )
            return math.log(ybar) - math.log1p(-ybar), 0.0
        if ybar <= 0.0:
            raise BoundaryNullError("intercept MLE undefined for all-zero counts")
        return math.log(ybar), 0.0


def _newton(ll: _LinkLoss, starts: list[tuple[float, float]], boundary: bool = False):
    b = np.array(min(starts, key=lambda s: ll.loss(*s)))
    loss = ll.loss(*b)
    iterations = 0
    gnorm = math.inf
    for _ in range(_MAX_ITER):
        g, h = ll.grad_hess(*b)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= _GRAD_STOP:
            break
        iterations += 1
        try:
            delta = np.linalg.solve(h, -g)
            if not np.all(np.isfinite(delta)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            ridge = 1e-10 * (abs(h[0, 0]) + abs(h[1, 1]) + 1.0)
            delta = np.linalg.solve(h + ridge * np.eye(2), -g)
        # step-halving line search: only ever accept a non-increase
        t = 1.0
        accepted = False
        while t >= 1e-12:
            cand = b + t * delta
            cand_loss = ll.loss(*cand)
            if cand_loss <= loss:
                improved = loss - cand_loss
                b, loss = cand, cand_loss
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        if improved <= 1e-15 * max(1.0, abs(loss)) and gnorm <= _GRAD_CONVERGED:
            break
    g, _ = ll.grad_hess(*b)
    gnorm = float(np.linalg.norm(g))
    converged = gnorm <= _GRAD_CONVERGED and not ll.any_capped(*b) and not boundary
    return GlmFit(beta0=float(b[0]), beta1=float(b[1]), loss=loss, converged=converged, iterations=iterations)


def _anchor_params(ll: _LinkLoss) -> tuple[list[tuple[float, float]], bool]:
    """Start points guaranteeing the optimum never exceeds the null or raw-model loss.

    Also reports whether the intercept-only MLE sits on the parameter
    boundary (single-class labels, all-zero counts): in that case the full
    MLE does not exist either and the fit is marked non-converged.
    """
    anchors = [(0.0, 1.0)]
    boundary = False
    for kind in (NullKind.INTERCEPT_MLE, NullKind.UNIFORM_BINARY):
        try:
            anchors.append(ll.null_params(kind))
        except BoundaryNullError:
            boundary = True
        except InvalidParameterError:
            continue
    return anchors, boundary


def fit_lifted_glm(calib: CalibrationSet, link: Link = Link.IDENTITY) -> GlmFit:
    """Minimise the link's loss over (intercept, slope).

    Newton-Raphson with step-halving, started from the best of the null
    and identity-parameter anchors, so the returned loss never exceeds
    either anchor's loss. ``converged`` is False when the gradient norm
    stays above 1e-8 or the maximum-likelihood estimate does not exist
    (perfect separation hitting the linear-predictor cap, boundary MLEs).
    """
    ll = _LinkLoss(calib, Link(link))
    anchors, boundary = _anchor_params(ll)
    return _newton(ll, anchors, boundary)


def null_loss(calib: CalibrationSet, link: Link = Link.IDENTITY, null_kind: NullKind = NullKind.INTERCEPT_MLE) -> float:
    """Loss of the no-dependence baseline under the chosen link.

    The uniform-binary null (logit only) fixes class probability 1/2 and
    costs n*ln(2); the intercept-MLE null evaluates the loss at the
    best intercept-only parameters (mean response on the link scale).
    """
    ll = _LinkLoss(calib, Link(link))
    null_kind = NullKind(null_kind)
    if null_kind is NullKind.INTERCEPT_MLE and ll.link is Link.LOG and float(ll.y.mean()) == 0.0:
        # Poisson with mean zero puts unit mass on zero counts: loss 0.
        return 0.0
    return ll.loss(*ll.null_params(null_kind))


def default_null_kind(link: Link) -> NullKind:
    return NullKind.UNIFORM_BINARY if Link(link) is Link.LOGIT else NullKind.INTERCEPT_MLE


def lcd(
    calib: CalibrationSet,
    predictions=None,
    link: Link = Link.IDENTITY,
    null_kind: NullKind | None = None,
    model_id: str = "model",
) -> LcdReport:
    """Score one model's predictions against the calibration responses.

    ``predictions`` defaults to the calibration set's own prediction
    column; pass a different vector to score another model against the
    same responses. The score is 1 - model_loss/null_loss and is
    guaranteed to lie in [0, 1].
    """
    link = Link(link)
    if null_kind is None:
        null_kind = default_null_kind(link)
    if predictions is not None:
        calib = CalibrationSet(calib.responses, np.asarray(predictions, dtype=float))

    ll = _LinkLoss(calib, link)
    nl = null_loss(calib, link, null_kind)
    if nl <= 0.0:
        raise UndefinedLcdError("null-model loss is zero; the loss ratio is undefined")
    anchors, boundary = _anchor_params(ll)
    fit = _newton(ll, anchors, boundary)
    value = 1.0 - fit.loss / nl
    return LcdReport(model_id=model_id, lcd=value, model_loss=fit.loss, null_loss=nl, lift=fit)


def raw_model_loss(calib: CalibrationSet, link: Link = Link.IDENTITY) -> float:
    """Link loss of the unadjusted model, i.e. at (intercept, slope) = (0, 1)."""
    return _LinkLoss(calib, Link(link)).loss(0.0, 1.0)


def exp_loss_lcd(model_loss: float, null_loss: float, n_calb: int) -> float:
    """Loss ratio built on the exp-transformed per-observation loss.

    1 - exp(2*model_loss/n) / exp(2*null_loss/n). With the uniform-binary
    null this variant cannot exceed 1 - 1/4 = 0.75 on binary data.
    """
    return -math.expm1(2.0 * (model_loss - null_loss) / n_calb)


def rank_models(
    calib: CalibrationSet,
    models: Sequence[tuple[str, np.ndarray]],
    link: Link = Link.IDENTITY,
    null_kind: NullKind | None = None,
) -> list[LcdReport]:
    """Score every (label, predictions) pair and sort ascending by score.

    A failure for one model is recorded in its report (``lcd`` None,
    ``error`` set) without aborting the batch; failed reports sort first.
    Ties break on the label.
    """
    if len(models) == 0:
        raise InvalidInputError("need at least one model to rank")
    reports = []
    for label, preds in models:
        try:
            reports.append(lcd(calib, preds, link=link, null_kind=null_kind, model_id=label))
        except (ValueError, RuntimeError) as exc:
            reports.append(
                LcdReport(model_id=label, lcd=None, model_loss=math.nan, null_loss=math.nan, lift=None, error=str(exc))
            )
    return sorted(reports, key=lambda r: (r.lcd if r.lcd is not None else -math.inf, r.model_id))


def mic(loss: float, complexity: float, model_id: str = "model") -> MicScore:
    """Loss-plus-complexity score; complexity 2q gives AIC, q*ln(n) gives BIC."""
    complexity = float(complexity)
    if complexity < 0.0 or not math.isfinite(complexity):
        raise InvalidParameterError(f"complexity must be a finite nonnegative real, got {complexity}")
    loss = float(loss)
    return MicScore(model_id=model_id, loss=loss, complexity=complexity, mic=loss + complexity)


def mic_probabilities(scores: Sequence[MicScore]) -> np.ndarray:
    """Softmax of -score/2 across models (max-shift stabilised).

    The score minimiser always receives the largest weight; weights sum
    to one.
    """
    if len(scores) == 0:
        raise InvalidInputError("need at least one score")
    values = np.array([s.mic for s in scores], dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("scores must be finite")
    w = np.exp(-0.5 * (values - values.min()))
    return w / w.sum()


def committee_predict(predictions, weights) -> np.ndarray:
    """Convex combination of the rows of ``predictions`` (models x points)."""
    p = np.asarray(predictions, dtype=float)
    w = np.asarray(weights, dtype=float)
    if p.ndim != 2 or w.ndim != 1 or p.shape[0] != w.shape[0]:
        raise ShapeMismatchError(f"predictions {p.shape} incompatible with weights {w.shape}")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-8:
        raise InvalidInputError("weights must be nonnegative and sum to one")
    return w @ p
