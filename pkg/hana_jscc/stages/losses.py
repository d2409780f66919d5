"""Reconstruction and distillation losses"""

from typing import NamedTuple, Optional, Tuple

from ..channel import ComplexTensor, complex_to_real
from ..config import KlOrder
from ..engine import Tensor, log_softmax
from ..errors import DimensionError

Features = Tuple[ComplexTensor, Tensor]


class KdLoss(NamedTuple):
    total: Tensor
    l1: Tensor
    kl: Optional[Tensor] = None


def l1_loss(x_hat: Tensor, x: Tensor) -> Tensor:
    """Mean absolute error over every element."""
    if x_hat.shape != x.shape:
        raise DimensionError("l1_loss", x_hat.shape, x.shape)
    return (x_hat - x).abs().mean()


def _log_distribution(features: Tensor) -> Tensor:
    """Per-sample log-softmax over the flattened features."""
    return log_softmax(features.reshape(features.shape[0], -1), axis=-1)


def kl_divergence(p_features: Tensor, q_features: Tensor) -> Tensor:
    """Batch mean of KL(softmax(p) || softmax(q))."""
    if p_features.shape != q_features.shape:
        raise DimensionError("kl_divergence", p_features.shape, q_features.shape)

    log_p = _log_distribution(p_features)
    log_q = _log_distribution(q_features)
    return (log_p.exp() * (log_p - log_q)).sum(axis=-1).mean()


def feature_kl(
    student: Tensor, teacher: Tensor, kl_order: KlOrder = KlOrder.STUDENT_FIRST
) -> Tensor:
    """KL between student and teacher features; the teacher side is a constant."""
    teacher = teacher.detach()
    if kl_order == KlOrder.TEACHER_FIRST:
        return kl_divergence(teacher, student)
    return kl_divergence(student, teacher)


def kd_loss(
    l1: Tensor,
    student_feats: Features,
    teacher_feats: Features,
    beta: float,
    kl_order: KlOrder = KlOrder.STUDENT_FIRST,
) -> KdLoss:
    """L1 plus beta times the KL terms on the channel symbols and decoded features.

    Complex symbols are compared through their real representation.
    """
    student_zc, student_zs = student_feats
    teacher_zc, teacher_zs = teacher_feats

    kl = feature_kl(complex_to_real(student_zc), complex_to_real(teacher_zc), kl_order)
    kl = kl + feature_kl(student_zs, teacher_zs, kl_order)

    if beta == 0:
        return KdLoss(total=l1, l1=l1, kl=kl.detach())
    return KdLoss(total=l1 + kl * float(beta), l1=l1, kl=kl)
