from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tqclass import kernel as kn
from tqclass.errors import StructuralError, ValidationError
from tqclass.feature_map import FeatureMapLayout
from tqclass.sim import ShotSampler, Statevector


@pytest.fixture()
def layout():
    return FeatureMapLayout(3, layers=1, rotation_pattern="Y", entangler="FullCZ")


def test_kernel_value_identical_inputs_is_one(layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    x = rng.uniform(0, np.pi, 3)
    assert kn.kernel_value(layout, theta, x, x) == pytest.approx(1.0, abs=1e-10)


def test_kernel_power_relation(layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xi, xj = rng.uniform(0, np.pi, (2, 3))
    k1 = kn.kernel_value(layout, theta, xi, xj, power=1)
    k2 = kn.kernel_value(layout, theta, xi, xj, power=2)
    assert k2 == pytest.approx(k1**2, abs=1e-12)
    assert 0.0 <= k2 <= k1 <= 1.0
    with pytest.raises(ValidationError):
        kn.kernel_value(layout, theta, xi, xj, power=0)


def test_build_kernel_matrix_properties(layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xs = rng.uniform(0, np.pi, size=(6, 3))
    kernel = kn.build_kernel_matrix(layout, theta, xs)
    k = kernel.entries
    assert np.allclose(k, k.T, atol=1e-12)
    assert np.allclose(np.diag(k), 1.0, atol=1e-12)
    assert np.all((k >= -1e-12) & (k <= 1.0 + 1e-12))
    # entries agree with pairwise kernel_value
    assert k[0, 1] == pytest.approx(
        kn.kernel_value(layout, theta, xs[0], xs[1]), abs=1e-10
    )
    with pytest.raises(ValidationError):
        kn.build_kernel_matrix(layout, theta, xs[:1])


def test_sampled_kernel_unbiased(layout, rng):
    # 3-sigma check of the inversion-test estimate over 200 repetitions
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xi, xj = rng.uniform(0, np.pi, (2, 3))
    exact = kn.kernel_value(layout, theta, xi, xj, power=2)
    shots, reps = 400, 200
    estimates = [
        kn.kernel_value(
            layout, theta, xi, xj, power=2, mode="sampled",
            sampler=ShotSampler(seed, shots),
        )
        for seed in range(reps)
    ]
    sem = np.sqrt(exact * (1 - exact) / shots) / np.sqrt(reps)
    assert abs(np.mean(estimates) - exact) < 3.0 * sem


def test_sampled_mode_validation(layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xi, xj = rng.uniform(0, np.pi, (2, 3))
    with pytest.raises(ValidationError):
        kn.kernel_value(layout, theta, xi, xj, mode="sampled")  # no sampler
    with pytest.raises(ValidationError):
        kn.kernel_value(layout, theta, xi, xj, power=1, mode="sampled",
                        sampler=ShotSampler(0, 10))
    with pytest.raises(ValidationError):
        kn.kernel_value(layout, theta, xi, xj, mode="bogus")


def test_sampled_matrix_deterministic(layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xs = rng.uniform(0, np.pi, size=(4, 3))
    a = kn.build_kernel_matrix(layout, theta, xs, mode="sampled",
                               sampler=ShotSampler(11, 500))
    b = kn.build_kernel_matrix(layout, theta, xs, mode="sampled",
                               sampler=ShotSampler(11, 500))
    assert np.array_equal(a.entries, b.entries)
    assert a.source == "sampled(500,11)"
    assert np.allclose(a.entries, a.entries.T)


def test_build_svm_matrix_formula(rng):
    k = np.array([[1.0, 0.3], [0.3, 1.0]])
    y = np.array([1, -1])
    svm = kn.build_svm_matrix(k, y, gamma=10.0)
    expected = np.array([[1.1, -0.3], [-0.3, 1.1]])
    assert np.allclose(svm.entries, expected, atol=1e-12)
    with pytest.raises(ValidationError):
        kn.build_svm_matrix(k, np.array([1, 0]), gamma=10.0)
    with pytest.raises(ValidationError):
        kn.build_svm_matrix(k, y, gamma=0.0)
    with pytest.raises(StructuralError):
        kn.build_svm_matrix(k, np.array([1, -1, 1]), gamma=1.0)


# ---------------------------------------------------------------------------
# Pauli machinery


def random_real_symmetric(rng, dim):
    a = rng.normal(size=(dim, dim))
    return (a + a.T) / 2.0


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_pauli_roundtrip(m, rng):
    matrix = random_real_symmetric(rng, 2**m)
    decomp = kn.pauli_decompose(matrix)
    assert np.allclose(decomp.reconstruct().real, matrix, atol=1e-8)
    assert np.allclose(decomp.reconstruct().imag, 0.0, atol=1e-8)
    assert decomp.lambda_total == pytest.approx(
        sum(abs(c) for c, _ in decomp.terms)
    )


def test_pauli_decompose_validation(rng):
    with pytest.raises(ValidationError):
        kn.pauli_decompose(np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        kn.pauli_decompose(random_real_symmetric(rng, 32))  # m > 4
    with pytest.raises(ValidationError):
        kn.pauli_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not Hermitian


def test_pauli_expectation_oracle(rng):
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    state = Statevector(2, amps)
    for word in ("IZ", "XI", "YY", "ZX"):
        dense = kn.pauli_word_matrix(word)
        expected = float(np.real(amps.conj() @ dense @ amps))
        assert kn.pauli_expectation(word, state) == pytest.approx(
            expected, abs=1e-12
        )


def test_sampled_expectation_unbiased(rng):
    matrix = random_real_symmetric(rng, 4)
    decomp = kn.pauli_decompose(matrix)
    amps = rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    state = Statevector(2, amps.astype(complex))
    exact = float(amps @ matrix @ amps)
    estimates = [
        kn.sampled_expectation(decomp, state, ShotSampler(seed, 600))
        for seed in range(150)
    ]
    spread = np.std(estimates) / np.sqrt(len(estimates))
    assert abs(np.mean(estimates) - exact) < 4.0 * spread + 1e-6


def test_sampled_expectation_dimension_check(rng):
    decomp = kn.pauli_decompose(random_real_symmetric(rng, 4))
    with pytest.raises(StructuralError):
        kn.sampled_expectation(
            decomp, Statevector(3, np.eye(8)[0].astype(complex)),
            ShotSampler(0, 10),
        )


# ---------------------------------------------------------------------------
# exports and block means


def test_export_csv_roundtrip(tmp_path, layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xs = rng.uniform(0, np.pi, size=(4, 3))
    kernel = kn.build_kernel_matrix(layout, theta, xs)
    path = tmp_path / "k.csv"
    kn.export_kernel_csv(kernel, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "id,s0,s1,s2,s3"
    parsed = np.array(
        [[float(v) for v in line.split(",")[1:]] for line in lines[1:]]
    )
    assert np.allclose(parsed, kernel.entries, atol=1e-10)


def test_export_pgm_format(tmp_path, layout, rng):
    theta = rng.uniform(0, 2 * np.pi, layout.parameter_count())
    xs = rng.uniform(0, np.pi, size=(3, 3))
    kernel = kn.build_kernel_matrix(layout, theta, xs)
    path = tmp_path / "k.pgm"
    kn.export_kernel_pgm(kernel, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == "3 3"
    assert lines[2] == "255"
    pixels = [int(v) for line in lines[3:] for v in line.split()]
    assert len(pixels) == 9
    assert all(0 <= p <= 255 for p in pixels)
    assert pixels[0] == 255  # unit diagonal


def test_class_block_means_hand_oracle():
    entries = np.array(
        [
            [1.0, 0.8, 0.2, 0.1],
            [0.8, 1.0, 0.3, 0.4],
            [0.2, 0.3, 1.0, 0.6],
            [0.1, 0.4, 0.6, 1.0],
        ]
    )
    kernel = kn.KernelMatrix(entries, 2, "exact")
    labels = np.array([0, 0, 1, 1])
    means = kn.class_block_means(kernel, labels)
    assert means[(0, 0)] == pytest.approx(0.8)
    assert means[(1, 1)] == pytest.approx(0.6)
    assert means[(0, 1)] == pytest.approx((0.2 + 0.1 + 0.3 + 0.4) / 4.0)


@given(power=st.integers(1, 4))
@settings(max_examples=10, deadline=None)
def test_gram_from_states_power(power):
    rng = np.random.default_rng(power)
    states = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    gram = kn.gram_from_states(states, power)
    base = np.abs(states.conj() @ states.T)
    assert np.allclose(gram[0, 1], base[0, 1] ** power, atol=1e-12)
    assert np.allclose(np.diag(gram), 1.0)
