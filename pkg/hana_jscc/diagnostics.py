"""Finite-difference gradient suite over every differentiable component

Primitives are checked on small random inputs; the codec is checked end to
end, one parameter group at a time, on a miniature 64-bit configuration
with the channel realization and noise frozen.
"""

from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from .channel import (
    ComplexTensor,
    complex_to_real,
    equalize,
    power_normalize,
    precode,
    sample_channel_realization,
    snr_to_noise_var,
    transmit,
)
from .engine import (
    AttentionWeights,
    GradCheckReport,
    Tensor,
    elementwise,
    grad_check,
    layer_norm,
    log_softmax,
    matmul,
    multi_head_attention,
    softmax,
)
from .model import HanaJSCC, ModelConfig, Precision, ResidualInit, Variant
from .stages.losses import kl_divergence, l1_loss
from .utils.log import getLogger

logger = getLogger(__file__)

SMOOTH_TOLERANCE = 1e-5
COMPOSITE_TOLERANCE = 1e-4
PRIMITIVE_EPS = 1e-6
# Larger step keeps round-off below the relative floor through the deep codec
MODEL_EPS = 1e-5
# Coordinates probed per parameter tensor in the codec checks
MODEL_ENTRIES = 4

MINIATURE_CONFIG = ModelConfig(
    n_tx=4,
    n_rx=4,
    d=2,
    d_prime=8,
    n_blocks=1,
    heads=2,
    mlp_ratio=2,
    c=3,
    h=8,
    w=8,
    semantic_channels=[8, 16],
    modulation_hidden=4,
    variant=Variant.HANA,
    residual_init=ResidualInit.RANDOM,
    precision=Precision.FLOAT64,
)


class ComponentCheck(BaseModel):
    component: str
    max_rel_error: float
    tolerance: float
    checked: int

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


class SuiteResult(BaseModel):
    components: List[ComponentCheck]

    @property
    def passed(self) -> bool:
        return all(component.passed for component in self.components)

    @property
    def failures(self) -> List[ComponentCheck]:
        return [component for component in self.components if not component.passed]


def _leaf(rng: np.random.Generator, *shape: int, offset: float = 0.0) -> Tensor:
    return Tensor(rng.standard_normal(shape) + offset, requires_grad=True)


def _weighted_sum(weights: np.ndarray) -> Callable[[Tensor], Tensor]:
    """Contract an output with fixed weights so every output entry matters."""
    constant = Tensor(weights)
    return lambda out: (out * constant).sum()


def _away_from_zero(rng: np.random.Generator, *shape: int, margin: float = 0.1) -> Tensor:
    values = rng.standard_normal(shape)
    values = np.sign(values) * (np.abs(values) + margin)
    return Tensor(values, requires_grad=True)


def _check(
    component: str,
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    tol: float,
    eps: float = PRIMITIVE_EPS,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> ComponentCheck:
    report: GradCheckReport = grad_check(
        f, inputs, eps=eps, tol=tol, max_entries=max_entries, seed=seed
    )
    logger.info(
        "%s: max relative error %.3e over %d coordinates", component, report.max_rel_error, report.checked
    )
    return ComponentCheck(
        component=component,
        max_rel_error=report.max_rel_error,
        tolerance=tol,
        checked=report.checked,
    )


def primitive_checks(seed: int = 0) -> List[ComponentCheck]:
    rng = np.random.default_rng(seed)
    checks = []

    a, b = _leaf(rng, 5, 4), _leaf(rng, 4, 3)
    project = _weighted_sum(rng.standard_normal((5, 3)))
    checks.append(_check("matmul", lambda a, b: project(matmul(a, b)), [a, b], SMOOTH_TOLERANCE))

    x, y = _leaf(rng, 3, 4), _leaf(rng, 3, 4)
    project = _weighted_sum(rng.standard_normal((3, 4)))
    for kind in ("add", "sub", "mul"):
        checks.append(
            _check(
                kind,
                lambda x, y, kind=kind: project(elementwise(kind, x, y)),
                [x, y],
                SMOOTH_TOLERANCE,
            )
        )
    checks.append(
        _check(
            "scale",
            lambda x: project(elementwise("scale", x, factor=-2.5)),
            [x],
            SMOOTH_TOLERANCE,
        )
    )

    checks.append(
        _check(
            "relu",
            lambda x: project(elementwise("relu", x)),
            [_away_from_zero(rng, 3, 4)],
            SMOOTH_TOLERANCE,
        )
    )
    for kind in ("gelu", "exp"):
        checks.append(
            _check(
                kind,
                lambda x, kind=kind: project(elementwise(kind, x)),
                [_leaf(rng, 3, 4)],
                SMOOTH_TOLERANCE,
            )
        )
    positive = Tensor(rng.uniform(0.5, 2.0, (3, 4)), requires_grad=True)
    checks.append(
        _check("log", lambda x: project(elementwise("log", x)), [positive], SMOOTH_TOLERANCE)
    )

    x = _leaf(rng, 3, 4)
    checks.append(_check("sigmoid", lambda x: project(x.sigmoid()), [x], SMOOTH_TOLERANCE))
    checks.append(_check("softmax", lambda x: project(softmax(x, axis=-1)), [x], SMOOTH_TOLERANCE))
    checks.append(
        _check("log_softmax", lambda x: project(log_softmax(x, axis=-1)), [x], SMOOTH_TOLERANCE)
    )

    x, gain, bias = _leaf(rng, 3, 8), _leaf(rng, 8), _leaf(rng, 8)
    project = _weighted_sum(rng.standard_normal((3, 8)))
    checks.append(
        _check(
            "layer_norm",
            lambda x, gain, bias: project(layer_norm(x, gain, bias)),
            [x, gain, bias],
            SMOOTH_TOLERANCE,
        )
    )

    tokens = _leaf(rng, 3, 8)
    weights = [Tensor(rng.standard_normal((8, 8)) / np.sqrt(8), requires_grad=True) for _ in range(4)]

    def attention(tokens: Tensor, w_q: Tensor, w_k: Tensor, w_v: Tensor, w_o: Tensor) -> Tensor:
        out = multi_head_attention(tokens, tokens, tokens, 2, AttentionWeights(w_q, w_k, w_v, w_o))
        return project(out)

    checks.append(_check("attention", attention, [tokens] + weights, COMPOSITE_TOLERANCE))

    return checks


def loss_checks(seed: int = 0) -> List[ComponentCheck]:
    rng = np.random.default_rng(seed + 1)
    target = rng.uniform(0.0, 1.0, (2, 3, 4))
    # Offsets bounded away from zero keep the L1 kink out of the stencil
    x_hat = Tensor(target + _away_from_zero(rng, 2, 3, 4).data * 0.2, requires_grad=True)
    constant = Tensor(target)

    p, q = _leaf(rng, 2, 6), _leaf(rng, 2, 6)
    return [
        _check("l1_loss", lambda x_hat: l1_loss(x_hat, constant), [x_hat], SMOOTH_TOLERANCE),
        _check("kl_divergence", kl_divergence, [p, q], SMOOTH_TOLERANCE),
    ]


def channel_checks(seed: int = 0) -> List[ComponentCheck]:
    """Power normalization, precoding, propagation and combining as one map."""
    rng = np.random.default_rng(seed + 2)
    realization = sample_channel_realization(
        2, 4, 4, 3, snr_db=5.0, sigma_e_sq=0.05, rng=rng
    )
    estimate = realization.h_est.svd()
    noise_var = snr_to_noise_var(realization.snr_db)
    project = _weighted_sum(rng.standard_normal((2, 4, 6)))

    def chain(re: Tensor, im: Tensor) -> Tensor:
        z_c = power_normalize(ComplexTensor(re, im))
        received = transmit(
            precode(z_c, estimate.v), realization.h_p, noise_var, unit_noise=realization.noise
        )
        return project(complex_to_real(equalize(received, estimate.u)))

    return [
        _check(
            "channel",
            chain,
            [_leaf(rng, 2, 4, 3), _leaf(rng, 2, 4, 3)],
            SMOOTH_TOLERANCE,
        )
    ]


def model_checks(
    config: ModelConfig = MINIATURE_CONFIG,
    seed: int = 0,
    max_entries: Optional[int] = MODEL_ENTRIES,
) -> List[ComponentCheck]:
    """One check per parameter group of the full forward pass."""
    rng = np.random.default_rng(seed + 3)
    model = HanaJSCC.build(config, rng)
    images = rng.uniform(0.0, 1.0, (2,) + config.image_shape)
    realization = sample_channel_realization(
        2, config.n_rx, config.n_tx, config.d, snr_db=5.0, sigma_e_sq=0.05, rng=rng
    )
    target = Tensor(images)

    # Squared error keeps the end-to-end loss smooth for differencing
    def loss(*_: Tensor) -> Tensor:
        result = model(images, realization)
        return ((result.x_hat - target) ** 2).mean()

    checks = []
    for group in model.store.groups:
        names = model.store.names(group)
        checks.append(
            _check(
                group.value,
                loss,
                [model.store[name] for name in names],
                COMPOSITE_TOLERANCE,
                eps=MODEL_EPS,
                max_entries=max_entries,
                seed=seed,
            )
        )
    model.store.zero_grad()
    return checks


def run_gradient_suite(seed: int = 0, max_entries: Optional[int] = MODEL_ENTRIES) -> SuiteResult:
    components = (
        primitive_checks(seed)
        + loss_checks(seed)
        + channel_checks(seed)
        + model_checks(seed=seed, max_entries=max_entries)
    )
    result = SuiteResult(components=components)
    if not result.passed:
        logger.error(
            "Gradient suite failed for %s",
            ", ".join(check.component for check in result.failures),
        )
    return result
