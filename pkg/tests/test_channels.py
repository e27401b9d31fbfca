#!/usr/bin/env python3
"""
量子信道单元测试
Test Kraus channels, composition, Stinespring form and factor reordering
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.channels import (
    QuantumChannel,
    depolarize_to_maximally_mixed,
    from_stinespring,
    identity_channel,
    permutation_matrix,
    prepare_fixed_state,
    reorder_input,
    reorder_output,
    stack_kraus,
    unitary_channel,
)
from models.errors import InvalidArgumentError
from services.quantum_kernel import haar_unitary, random_density_matrix


class TestQuantumChannel:
    """量子信道测试套件"""

    def test_identity(self):
        """测试恒等信道"""
        channel = identity_channel((0, 1))
        rho = random_density_matrix(2, seed=1).data
        np.testing.assert_allclose(channel.apply(rho), rho, atol=1e-12)
        assert channel.is_trace_preserving()
        assert channel.unital_residual() < 1e-12

    def test_prepare_fixed_state(self):
        """测试 σ ↦ ω ⊗ σ"""
        omega = random_density_matrix(1, seed=2).data
        sigma = random_density_matrix(1, seed=3).data
        channel = prepare_fixed_state(omega, (0,), (1,))
        assert channel.output_qubits == (0, 1)
        assert channel.is_trace_preserving()
        np.testing.assert_allclose(channel.apply(sigma), np.kron(omega, sigma), atol=1e-12)

    def test_prepare_rejects_non_state(self):
        """测试 ω 不是密度矩阵"""
        with pytest.raises(InvalidArgumentError):
            prepare_fixed_state(np.eye(2), (0,), (1,))

    def test_depolarize(self):
        """测试制备最大混态"""
        channel = depolarize_to_maximally_mixed((0,), (1,))
        sigma = random_density_matrix(1, seed=4).data
        np.testing.assert_allclose(channel.apply(sigma), np.kron(np.eye(2) / 2, sigma), atol=1e-12)

    def test_compose(self):
        """测试信道复合与先后顺序"""
        u = haar_unitary(2, seed=5)
        v = haar_unitary(2, seed=6)
        first = unitary_channel(u, (0,))
        second = unitary_channel(v, (0,))
        composed = second.compose(first)
        rho = random_density_matrix(1, seed=7).data
        expected = (v @ u) @ rho @ (v @ u).conj().T
        np.testing.assert_allclose(composed.apply(rho), expected, atol=1e-12)
        with pytest.raises(InvalidArgumentError):
            identity_channel((0, 1)).compose(first)

    def test_adjoint_duality(self):
        """测试 Tr[X N(ρ)] = Tr[N*(X) ρ]"""
        channel = stack_kraus([
            QuantumChannel(np.sqrt(0.7) * haar_unitary(4, seed=8)[None], (0, 1), (0, 1)),
            QuantumChannel(np.sqrt(0.3) * haar_unitary(4, seed=9)[None], (0, 1), (0, 1)),
        ])
        assert channel.is_trace_preserving()
        rho = random_density_matrix(2, seed=10).data
        x = random_density_matrix(2, seed=11).data
        lhs = np.trace(x @ channel.apply(rho))
        rhs = np.trace(channel.apply_adjoint(x) @ rho)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_stinespring_round_trip(self):
        """测试 Stinespring 等距矩阵与 Kraus 表示互相转换"""
        channel = stack_kraus([
            QuantumChannel(np.sqrt(0.5) * haar_unitary(2, seed=12)[None], (0,), (0,)),
            QuantumChannel(np.sqrt(0.5) * haar_unitary(2, seed=13)[None], (0,), (0,)),
        ])
        iso = channel.stinespring
        np.testing.assert_allclose(iso.conj().T @ iso, np.eye(2), atol=1e-12)
        rebuilt = from_stinespring(iso, 2, (0,), (0,))
        rho = random_density_matrix(1, seed=14).data
        np.testing.assert_allclose(rebuilt.apply(rho), channel.apply(rho), atol=1e-12)

    def test_complementary_of_unitary(self):
        """测试幺正信道的互补信道输出纯环境态"""
        channel = unitary_channel(haar_unitary(2, seed=15), (0,))
        env = channel.complementary().apply(random_density_matrix(1, seed=16).data)
        assert env.shape == (1, 1)
        assert env[0, 0].real == pytest.approx(1.0, abs=1e-12)

    def test_choi_trace(self):
        """测试 Choi 矩阵的迹等于输入维数"""
        channel = depolarize_to_maximally_mixed((0,), (1,))
        choi = channel.choi()
        assert np.trace(choi).real == pytest.approx(2.0, abs=1e-12)
        assert np.linalg.eigvalsh(choi).min() > -1e-12

    def test_permutation_is_swap(self):
        """测试两比特置换矩阵为 SWAP"""
        swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
        np.testing.assert_allclose(permutation_matrix([0, 1], [1, 0]), swap)
        with pytest.raises(InvalidArgumentError):
            permutation_matrix([0, 1], [0, 2])

    def test_reorder(self):
        """测试输出与输入因子重排"""
        omega = random_density_matrix(1, seed=17).data
        sigma = random_density_matrix(1, seed=18).data
        channel = reorder_output(prepare_fixed_state(omega, (0,), (1,)), (1, 0))
        assert channel.output_qubits == (1, 0)
        np.testing.assert_allclose(channel.apply(sigma), np.kron(sigma, omega), atol=1e-12)

        rho = np.kron(random_density_matrix(1, seed=19).data, sigma)
        swapped = reorder_input(identity_channel((0, 1)), (1, 0))
        assert swapped.input_qubits == (1, 0)
        p = permutation_matrix([0, 1], [1, 0])
        np.testing.assert_allclose(swapped.apply(p @ rho @ p.T), rho, atol=1e-12)

    def test_shape_validation(self):
        """测试标签与维数不符"""
        with pytest.raises(InvalidArgumentError):
            QuantumChannel(np.eye(4)[None], (0,), (0, 1))
