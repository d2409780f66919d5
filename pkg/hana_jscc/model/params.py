"""Named, grouped parameter tensors"""

import enum
import hashlib
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import numpy as np

from ..engine import Tensor
from ..errors import ConfigurationError, DimensionError


@enum.unique
class ParameterGroup(str, enum.Enum):
    SEMANTIC_ENC = "semantic_enc"
    SEMANTIC_DEC = "semantic_dec"
    CHANNEL_ENC = "channel_enc"
    CHANNEL_DEC = "channel_dec"
    ADAPTOR_TX = "adaptor_tx"
    ADAPTOR_RX = "adaptor_rx"


SEMANTIC_GROUPS = (ParameterGroup.SEMANTIC_ENC, ParameterGroup.SEMANTIC_DEC)
CHANNEL_GROUPS = (
    ParameterGroup.CHANNEL_ENC,
    ParameterGroup.CHANNEL_DEC,
    ParameterGroup.ADAPTOR_TX,
    ParameterGroup.ADAPTOR_RX,
)


class ParameterStore:
    """Parameter tensors keyed by stable dotted names.

    Freezing a group clears `requires_grad` on its tensors, so no graph edge
    reaches them and the optimizer leaves them untouched.
    """

    def __init__(self, dtype: np.dtype = np.float64):
        self.dtype = np.dtype(dtype)
        self._tensors: Dict[str, Tensor] = {}
        self._groups: Dict[str, ParameterGroup] = {}
        self._frozen: Set[ParameterGroup] = set()

    def __repr__(self) -> str:
        return f"ParameterStore({len(self)} tensors, frozen={sorted(g.value for g in self._frozen)})"

    def __len__(self) -> int:
        return len(self._tensors)

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._tensors[name]
        except KeyError:
            raise ConfigurationError(f"Unknown parameter {name}")

    def add(self, name: str, group: ParameterGroup, values: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ConfigurationError(f"Duplicate parameter name {name}")

        group = ParameterGroup(group)
        tensor = Tensor(
            np.array(values, dtype=self.dtype),
            requires_grad=group not in self._frozen,
            name=name,
        )
        self._tensors[name] = tensor
        self._groups[name] = group
        return tensor

    def group_of(self, name: str) -> ParameterGroup:
        return self._groups[name]

    @property
    def groups(self) -> List[ParameterGroup]:
        """Groups present in this store, in declaration order."""
        seen: List[ParameterGroup] = []
        for group in self._groups.values():
            if group not in seen:
                seen.append(group)
        return seen

    def names(self, group: Optional[ParameterGroup] = None) -> List[str]:
        if group is None:
            return list(self._tensors)
        return [name for name, owner in self._groups.items() if owner == group]

    def items(self, group: Optional[ParameterGroup] = None) -> List[Tuple[str, Tensor]]:
        return [(name, self._tensors[name]) for name in self.names(group)]

    def trainable(self) -> List[Tuple[str, Tensor]]:
        return [
            (name, tensor)
            for name, tensor in self._tensors.items()
            if self._groups[name] not in self._frozen
        ]

    @property
    def frozen_groups(self) -> Set[ParameterGroup]:
        return set(self._frozen)

    def is_frozen(self, group: ParameterGroup) -> bool:
        return ParameterGroup(group) in self._frozen

    def freeze(self, *groups: ParameterGroup) -> None:
        self._set_frozen(groups or tuple(ParameterGroup), True)

    def unfreeze(self, *groups: ParameterGroup) -> None:
        self._set_frozen(groups or tuple(ParameterGroup), False)

    def _set_frozen(self, groups: Iterable[ParameterGroup], frozen: bool) -> None:
        for group in groups:
            group = ParameterGroup(group)
            if frozen:
                self._frozen.add(group)
            else:
                self._frozen.discard(group)

            for name in self.names(group):
                self._tensors[name].requires_grad = not frozen
                self._tensors[name].grad = None

    @property
    def all_frozen(self) -> bool:
        return all(group in self._frozen for group in self.groups)

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.grad = None

    def copy(self) -> "ParameterStore":
        clone = ParameterStore(self.dtype)
        clone._frozen = set(self._frozen)
        for name, tensor in self._tensors.items():
            clone.add(name, self._groups[name], tensor.data.copy())
        return clone

    def transfer_from(
        self, other: "ParameterStore", groups: Optional[Iterable[ParameterGroup]] = None
    ) -> List[str]:
        """Copy values of every shared parameter (optionally limited to `groups`)."""
        wanted = None if groups is None else {ParameterGroup(group) for group in groups}
        transferred = []

        for name, tensor in self._tensors.items():
            if name not in other or (wanted is not None and self._groups[name] not in wanted):
                continue

            source = other[name]
            if source.shape != tensor.shape:
                raise DimensionError(f"transfer {name}", source.shape, tensor.shape)

            tensor.data = source.data.astype(self.dtype, copy=True)
            transferred.append(name)

        return transferred

    def snapshot(self, group: Optional[ParameterGroup] = None) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.items(group)}

    def fingerprint(self, group: Optional[ParameterGroup] = None) -> str:
        """md5 over names, shapes and raw bytes, for bitwise comparisons."""
        digest = hashlib.md5()
        for name, tensor in self.items(group):
            digest.update(name.encode("utf-8"))
            digest.update(str(tensor.shape).encode("utf-8"))
            digest.update(np.ascontiguousarray(tensor.data).tobytes())
        return digest.hexdigest()

    def bitwise_equal(self, other: "ParameterStore") -> bool:
        if list(self) != list(other):
            return False
        return all(
            self[name].dtype == other[name].dtype
            and np.array_equal(self[name].data, other[name].data)
            for name in self
        )

    def global_grad_norm(self) -> float:
        total = 0.0
        for _, tensor in self.trainable():
            if tensor.grad is not None:
                total += float(np.sum(np.square(tensor.grad, dtype=np.float64)))
        return float(np.sqrt(total))
