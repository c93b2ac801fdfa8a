import numpy as np
import pytest

from subtrace.metrics import orthonormality_error
from subtrace.model import (
    ConfigError,
    ScenarioConfig,
    generate_true_bases,
    parse_config,
    perturb_basis,
    snapshot,
    snapshots,
    stream,
)
from subtrace.numkit import span_distance

CFG = ScenarioConfig()


def test_defaults_match_experiment():
    assert (CFG.n_sensors, CFG.subspace_rank) == (8, 4)
    assert CFG.signal_powers == (10.0, 1.0, 0.1, 0.1)
    assert CFG.noise_variance == 1e-3
    assert (CFG.n_steps, CFG.break_step, CFG.break_variance) == (6000, 3000, 0.1)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(subspace_rank=9),
        dict(signal_powers=(1.0, 1.0, 1.0)),
        dict(signal_powers=(1.0, 0.0, 1.0, 1.0)),
        dict(noise_variance=0.0),
        dict(break_step=0),
        dict(break_step=6001),
        dict(break_variance=-1.0),
        dict(seed=2**64),
        dict(manifold="ula"),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ScenarioConfig(**kwargs)


def test_parse_config_roundtrip():
    text = """
    # comment
    n_sensors = 6
    subspace_rank = 2
    signal_powers = 5, 0.5
    noise_variance = 1e-2
    n_steps = 100
    break_step = 50
    break_variance = 0.2
    seed = 99
    """
    cfg = parse_config(text)
    assert cfg == ScenarioConfig(6, 2, (5.0, 0.5), 1e-2, 100, 50, 0.2, 99)


def test_parse_config_break_none():
    assert parse_config("break_step = none").break_step is None


@pytest.mark.parametrize("text", ["bogus = 1", "n_sensors 8", "n_sensors = eight"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_true_bases_deterministic():
    a = generate_true_bases(CFG, stream(7, 0, 0))
    b = generate_true_bases(CFG, stream(7, 0, 0))
    np.testing.assert_array_equal(a.manifold, b.manifold)
    np.testing.assert_array_equal(a.noise_basis, b.noise_basis)


def test_true_bases_geometry():
    tb = generate_true_bases(CFG, stream(1, 3, 0))
    assert orthonormality_error(tb.manifold) <= 1e-20
    assert span_distance(tb.signal_basis, tb.manifold) <= 1e-8
    assert np.linalg.norm(tb.noise_basis.conj().T @ tb.signal_basis) ** 2 <= 1e-20
    frame = np.hstack([tb.signal_basis, tb.noise_basis])
    assert span_distance(frame, np.eye(8)) <= 1e-16
    assert orthonormality_error(frame) <= 1e-20


def test_canonical_manifold():
    tb = generate_true_bases(ScenarioConfig(manifold="canonical"), stream(0, 0, 0))
    np.testing.assert_array_equal(tb.manifold, np.eye(8)[:, :4])


def test_snapshots_deterministic():
    tb = generate_true_bases(CFG, stream(0, 0, 0))
    np.testing.assert_array_equal(snapshots(tb, CFG, stream(0, 0, 2), 50), snapshots(tb, CFG, stream(0, 0, 2), 50))


def test_snapshot_degenerate_limit():
    cfg = ScenarioConfig(signal_powers=(1e-300,) * 4, noise_variance=1e-300)
    tb = generate_true_bases(cfg, stream(0, 0, 0))
    x = snapshot(tb, cfg, stream(0, 0, 2))
    assert np.linalg.norm(x) < 1e-140


def test_signal_containment_without_noise():
    cfg = ScenarioConfig(noise_variance=1e-300)
    tb = generate_true_bases(cfg, stream(0, 0, 0))
    x = snapshots(tb, cfg, stream(0, 0, 2), 1000)
    v = tb.signal_basis
    resid = x - (x @ v.conj()) @ v.T
    assert np.all(np.linalg.norm(resid, axis=1) <= 1e-10 * np.linalg.norm(x, axis=1))


@pytest.fixture(scope="module")
def big_sample():
    tb = generate_true_bases(CFG, stream(2024, 0, 0))
    return tb, snapshots(tb, CFG, stream(2024, 0, 2), 100_000)


def test_mean_snapshot_power(big_sample):
    _, x = big_sample
    # sum of powers + N * noise variance = 11.2 + 0.008
    expected = sum(CFG.signal_powers) + CFG.n_sensors * CFG.noise_variance
    assert expected == pytest.approx(11.208)
    assert np.mean(np.sum(np.abs(x) ** 2, axis=1)) == pytest.approx(expected, abs=0.5)


def test_noise_residual_power(big_sample):
    tb, x = big_sample
    v = tb.signal_basis
    resid = x - (x @ v.conj()) @ v.T
    # (N - L) * noise variance
    assert np.mean(np.sum(np.abs(resid) ** 2, axis=1)) == pytest.approx(0.004, rel=0.2)


def test_per_source_power(big_sample):
    tb, x = big_sample
    coords = x @ tb.manifold.conj()  # s_i plus the noise component along a_i
    expected = np.array(CFG.signal_powers) + CFG.noise_variance
    np.testing.assert_allclose(np.var(coords, axis=0), expected, rtol=0.05)


def test_perturb_zero_variance():
    w = np.eye(8, dtype=complex)[:, :4]
    np.testing.assert_array_equal(perturb_basis(w, 0.0, stream(0, 0, 3)), w)


def test_perturbation_energy():
    w = np.zeros((8, 4), dtype=complex)
    rng = stream(5, 0, 3)
    energy = [np.linalg.norm(perturb_basis(w, 0.1, rng)) ** 2 for _ in range(10_000)]
    assert np.mean(energy) == pytest.approx(3.2, rel=0.1)


def test_perturbation_breaks_orthonormality():
    w = np.eye(8, dtype=complex)[:, :4]
    rng = stream(6, 0, 3)
    etas = np.array([orthonormality_error(perturb_basis(w, 0.1, rng)) for _ in range(2000)])
    assert np.mean(etas > 0.01) > 0.99
