import numpy as np
import pytest

from hana_jscc.errors import ConfigurationError, DimensionError
from hana_jscc.model import ParameterGroup, ParameterStore


@pytest.fixture
def store():
    store = ParameterStore()
    store.add("enc.weight", ParameterGroup.SEMANTIC_ENC, np.ones((2, 3)))
    store.add("ch.weight", ParameterGroup.CHANNEL_ENC, np.arange(4.0))
    store.add("enc.bias", ParameterGroup.SEMANTIC_ENC, np.zeros(3))
    return store


def test_lookup(store):
    assert len(store) == 3
    assert "enc.weight" in store
    assert store["ch.weight"].name == "ch.weight"
    assert store.group_of("enc.bias") == ParameterGroup.SEMANTIC_ENC
    assert store.groups == [ParameterGroup.SEMANTIC_ENC, ParameterGroup.CHANNEL_ENC]
    assert store.names(ParameterGroup.SEMANTIC_ENC) == ["enc.weight", "enc.bias"]


def test_unknown_and_duplicate_names(store):
    with pytest.raises(ConfigurationError):
        store["missing"]
    with pytest.raises(ConfigurationError):
        store.add("enc.weight", ParameterGroup.SEMANTIC_ENC, np.ones(1))


def test_freeze_and_unfreeze(store):
    store["enc.weight"].grad = np.ones((2, 3))

    store.freeze(ParameterGroup.SEMANTIC_ENC)

    assert not store["enc.weight"].requires_grad
    assert store["enc.weight"].grad is None
    assert store["ch.weight"].requires_grad
    assert [name for name, _ in store.trainable()] == ["ch.weight"]
    assert not store.all_frozen

    store.freeze()
    assert store.all_frozen

    store.unfreeze()
    assert store.frozen_groups == set()
    assert all(store[name].requires_grad for name in store)


def test_params_added_to_frozen_group_stay_frozen(store):
    store.freeze(ParameterGroup.ADAPTOR_TX)

    tensor = store.add("tx.weight", ParameterGroup.ADAPTOR_TX, np.ones(2))

    assert not tensor.requires_grad


def test_copy_is_independent(store):
    store.freeze(ParameterGroup.CHANNEL_ENC)
    clone = store.copy()

    assert clone.bitwise_equal(store)
    assert clone.is_frozen(ParameterGroup.CHANNEL_ENC)

    clone["enc.weight"].data[0, 0] = 5.0
    assert store["enc.weight"].data[0, 0] == 1.0
    assert not clone.bitwise_equal(store)


def test_transfer_limited_to_groups(store):
    target = ParameterStore()
    target.add("enc.weight", ParameterGroup.SEMANTIC_ENC, np.zeros((2, 3)))
    target.add("ch.weight", ParameterGroup.CHANNEL_ENC, np.zeros(4))
    target.add("extra", ParameterGroup.ADAPTOR_RX, np.zeros(1))

    moved = target.transfer_from(store, groups=[ParameterGroup.SEMANTIC_ENC])

    assert moved == ["enc.weight"]
    assert np.array_equal(target["enc.weight"].data, np.ones((2, 3)))
    assert np.array_equal(target["ch.weight"].data, np.zeros(4))


def test_transfer_shape_mismatch(store):
    target = ParameterStore()
    target.add("ch.weight", ParameterGroup.CHANNEL_ENC, np.zeros(5))

    with pytest.raises(DimensionError):
        target.transfer_from(store)


def test_fingerprint_tracks_bytes(store):
    semantic = store.fingerprint(ParameterGroup.SEMANTIC_ENC)
    full = store.fingerprint()

    store["ch.weight"].data[1] = 7.0

    assert store.fingerprint(ParameterGroup.SEMANTIC_ENC) == semantic
    assert store.fingerprint() != full


def test_global_grad_norm_skips_frozen(store):
    store["ch.weight"].grad = np.array([3.0, 0.0, 0.0, 4.0])
    store["enc.bias"].grad = np.ones(3)
    store.freeze(ParameterGroup.SEMANTIC_ENC)
    store["enc.bias"].grad = np.ones(3)

    assert store.global_grad_norm() == 5.0


def test_float32_store():
    store = ParameterStore(np.float32)

    tensor = store.add("w", ParameterGroup.CHANNEL_DEC, np.ones(2))

    assert tensor.dtype == np.float32
