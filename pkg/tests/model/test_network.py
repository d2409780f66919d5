import numpy as np
import pytest

from hana_jscc.channel import inject_estimation_error, sample_channel_realization, sample_rayleigh
from hana_jscc.engine import Tensor, no_grad
from hana_jscc.errors import ConfigurationError, ContractError, DimensionError, InputRangeError
from hana_jscc.model import HanaJSCC, ModelConfig, ParameterGroup, ParameterStore, Variant
from hana_jscc.model.layers import SnrModulation, depth_to_space, space_to_depth


def _realization(config, batch=2, seed=11, sigma_e_sq=0.05):
    return sample_channel_realization(
        batch, config.n_rx, config.n_tx, config.d, 5.0, sigma_e_sq, np.random.default_rng(seed)
    )


def test_forward_shapes(mini_model, tiny_images):
    config = mini_model.config

    result = mini_model(tiny_images[:2], _realization(config))

    assert result.x_hat.shape == (2,) + config.image_shape
    assert result.z_c.shape == (2, config.n_tx, config.d)
    assert result.z_hat_s.shape == (2,) + config.semantic_shape
    assert np.all((result.x_hat.data > 0) & (result.x_hat.data < 1))


def test_transmitted_symbols_have_unit_power(mini_model, tiny_images):
    config = mini_model.config

    result = mini_model(tiny_images[:2], _realization(config))

    energy = result.z_c.symbol_energy().data.reshape(-1)
    assert np.allclose(energy, config.n_tx * config.d, rtol=0, atol=1e-9)


def test_forward_is_deterministic(mini_model, tiny_images):
    realization = _realization(mini_model.config)

    first = mini_model(tiny_images[:2], realization)
    second = mini_model(tiny_images[:2], realization)

    assert np.array_equal(first.x_hat.data, second.x_hat.data)


def test_image_out_of_range(mini_model, tiny_images):
    images = tiny_images[:2].copy()
    images[0, 0, 0, 0] = 1.5

    with pytest.raises(InputRangeError):
        mini_model(images, _realization(mini_model.config))


def test_image_shape_mismatch(mini_model):
    with pytest.raises(DimensionError):
        mini_model(np.zeros((2, 3, 4, 4)), _realization(mini_model.config))


def test_without_adaptor(mini_config):
    config = mini_config.with_variant(Variant.NO_ADAPTOR)

    model = HanaJSCC.build(config, np.random.default_rng(0))

    assert ParameterGroup.ADAPTOR_TX not in model.store.groups
    assert ParameterGroup.ADAPTOR_RX not in model.store.groups
    with pytest.raises(ConfigurationError):
        model.csi_tokenize(_realization(config).h_est)


def test_zero_initialized_adaptor_is_identity(mini_config_zero_init, tiny_images):
    hana = HanaJSCC.build(mini_config_zero_init, np.random.default_rng(3))
    plain = HanaJSCC.build(
        mini_config_zero_init.with_variant(Variant.NO_ADAPTOR), np.random.default_rng(4)
    )
    plain.store.transfer_from(hana.store)
    realization = _realization(hana.config)

    with no_grad():
        adapted = hana(tiny_images[:2], realization)
        baseline = plain(tiny_images[:2], realization)

    assert np.array_equal(adapted.x_hat.data, baseline.x_hat.data)


def test_adaptor_sees_channel_estimate(mini_model, tiny_images):
    realization = _realization(mini_model.config, sigma_e_sq=0.0)
    other = realization._replace(h_est=_realization(mini_model.config, seed=12).h_est)

    with no_grad():
        tokens = mini_model.channel_encode_1(mini_model.semantic_encode(Tensor(tiny_images[:2]), 5.0))
        first = mini_model.cma_apply(tokens, realization.h_est, "tx")
        second = mini_model.cma_apply(tokens, other.h_est, "tx")

    assert first.shape == tokens.shape
    assert not np.allclose(first.data, second.data)


def test_cma_rejects_wrong_token_count(mini_model):
    h_est = _realization(mini_model.config).h_est

    with pytest.raises(DimensionError):
        mini_model.cma_apply(Tensor(np.zeros((2, 3, mini_model.config.d_prime))), h_est, "tx")
    with pytest.raises(ConfigurationError):
        mini_model.cma_apply(Tensor(np.zeros((2, 4, mini_model.config.d_prime))), h_est, "middle")


def test_rectangular_array_zeroes_inactive_streams(mini_config, tiny_images):
    config = ModelConfig(**{**mini_config.dict(), "n_rx": 2})
    model = HanaJSCC.build(config, np.random.default_rng(5))

    result = model(tiny_images[:2], _realization(config))

    assert config.streams == 2
    assert np.all(result.z_c.re.data[:, 2:] == 0)
    assert np.all(result.z_c.im.data[:, 2:] == 0)
    assert result.x_hat.shape == (2,) + config.image_shape


def test_every_parameter_receives_gradient(mini_model, tiny_images):
    images = tiny_images[:2]

    result = mini_model(images, _realization(mini_model.config))
    ((result.x_hat - Tensor(images)) ** 2).mean().backward()

    for name in mini_model.store:
        grad = mini_model.store[name].grad
        assert grad is not None, name
        assert np.all(np.isfinite(grad)), name
        assert np.any(grad != 0), name


def test_bind_rejects_incomplete_store(mini_config, mini_model):
    plain = mini_config.with_variant(Variant.NO_ADAPTOR)
    small = HanaJSCC.build(plain, np.random.default_rng(0))

    with pytest.raises(ConfigurationError):
        HanaJSCC(mini_config, small.store)
    assert HanaJSCC(plain, mini_model.store).variant == Variant.NO_ADAPTOR


def test_declare_matches_build(mini_config, mini_model):
    names = [spec.name for spec in HanaJSCC.declare(mini_config)]

    assert names == list(mini_model.store)


def test_space_to_depth_round_trip():
    x = Tensor(np.arange(2 * 4 * 6 * 3, dtype=float).reshape(2, 4, 6, 3))

    folded = space_to_depth(x)

    assert folded.shape == (2, 2, 3, 12)
    assert np.array_equal(depth_to_space(folded).data, x.data)


def _modulation(zero_output=False):
    modulation = SnrModulation("mod", ParameterGroup.SEMANTIC_ENC, 4, 3)
    store = ParameterStore()
    rng = np.random.default_rng(21)
    for spec in modulation.specs():
        values = spec.initialize(rng)
        if zero_output and spec.name.startswith("mod.out"):
            values = np.zeros(spec.shape)
        store.add(spec.name, spec.group, values)
    return modulation, store


def test_snr_modulation_with_zero_output_is_identity():
    modulation, store = _modulation(zero_output=True)
    features = Tensor(np.random.default_rng(1).standard_normal((2, 3, 3, 4)))

    modulated = modulation(store, features, [0.0, 10.0])

    assert modulated.shape == features.shape
    assert np.array_equal(modulated.data, features.data)


def test_snr_modulation_gradients():
    modulation, store = _modulation()
    features = Tensor(np.random.default_rng(1).standard_normal((2, 3, 3, 4)), requires_grad=True)

    modulated = modulation(store, features, [0.0, 10.0])
    (modulated**2).mean().backward()

    assert modulated.shape == features.shape
    assert np.any(features.grad != 0)
    for name in store:
        assert np.any(store[name].grad != 0), name


def test_semantic_encode_depends_on_snr(mini_model, tiny_images):
    x = Tensor(tiny_images[:2])

    with no_grad():
        low = mini_model.semantic_encode(x, 0.0)
        high = mini_model.semantic_encode(x, 10.0)

    assert low.shape == high.shape == (2,) + mini_model.config.semantic_shape
    assert not np.allclose(low.data, high.data)


def test_without_snr_adaptation(mini_config, tiny_images):
    config = mini_config.with_variant(Variant.NO_SNR_ADAPT)
    model = HanaJSCC.build(config, np.random.default_rng(0))
    x = Tensor(tiny_images[:2])

    with no_grad():
        low = model.semantic_encode(x, 0.0)
        high = model.semantic_encode(x, 10.0)
        result = model(tiny_images[:2], _realization(config))

    assert not any(".mod" in name for name in model.store)
    assert [spec.name for spec in HanaJSCC.declare(config)] == list(model.store)
    assert np.array_equal(low.data, high.data)
    assert result.x_hat.shape == (2,) + config.image_shape


def test_noise_level_changes_reconstruction(mini_model, tiny_images):
    realization = _realization(mini_model.config)

    with no_grad():
        quiet = mini_model(tiny_images[:2], realization, sigma_n_sq=0.01)
        loud = mini_model(tiny_images[:2], realization, sigma_n_sq=1.0)

    assert not np.allclose(quiet.x_hat.data, loud.x_hat.data)


def test_realization_without_noise_needs_rng(mini_model, tiny_images):
    config = mini_model.config
    rng = np.random.default_rng(13)
    h_p = sample_rayleigh(config.n_rx, config.n_tx, rng, batch=2)
    realization = inject_estimation_error(h_p, 0.05, rng, snr_db=5.0)

    with pytest.raises(ContractError):
        mini_model(tiny_images[:2], realization)

    with no_grad():
        result = mini_model(tiny_images[:2], realization, rng=np.random.default_rng(14))
        noiseless = mini_model(tiny_images[:2], realization, sigma_n_sq=0.0)

    assert result.x_hat.shape == (2,) + config.image_shape
    assert not np.allclose(result.x_hat.data, noiseless.x_hat.data)


@pytest.mark.parametrize("n_tx", [4, 8, 16])
@pytest.mark.parametrize("n_rx", [4, 8, 16])
def test_antenna_grid_shapes(mini_config, tiny_images, n_tx, n_rx):
    config = ModelConfig(**{**mini_config.dict(), "n_tx": n_tx, "n_rx": n_rx})
    model = HanaJSCC.build(config, np.random.default_rng(5))

    with no_grad():
        result = model(tiny_images[:2], _realization(config))

    assert result.z_c.shape == (2, n_tx, config.d)
    assert result.z_hat_s.shape == (2,) + config.semantic_shape
    assert result.x_hat.shape == (2,) + config.image_shape
