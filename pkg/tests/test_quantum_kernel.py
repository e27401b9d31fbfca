#!/usr/bin/env python3
"""
量子信息内核单元测试
Test partial trace, distances, entropies and the derived bounds
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.errors import InvalidArgumentError, OutOfDomainError
from models.states import PureState, StateMatrix
from services.quantum_kernel import (
    bures_distance,
    check_fuchs_van_de_graaf,
    entropy,
    fidelity,
    haar_unitary,
    mi_continuity_bound,
    mi_correctability_bound,
    mutual_information,
    partial_trace,
    random_density_matrix,
    random_pure_state,
    trace_distance,
)


def _bell() -> PureState:
    return PureState(np.array([1, 0, 0, 1]) / math.sqrt(2), (0, 1))


def _ghz() -> PureState:
    vec = np.zeros(8)
    vec[0] = vec[7] = 1 / math.sqrt(2)
    return PureState(vec, (0, 1, 2))


def _mix(rho: StateMatrix, sigma: StateMatrix, p: float) -> StateMatrix:
    data = (1 - p) * rho.data + p * sigma.data
    return StateMatrix((data + data.conj().T) / 2, rho.labels)


class TestDistances:
    """距离与保真度测试套件"""

    def test_fidelity_zero_plus(self):
        """测试 F(|0>, |+>) = 1/√2 及对应 Bures 距离"""
        zero = PureState(np.array([1, 0]), (0,))
        plus = PureState(np.array([1, 1]) / math.sqrt(2), (0,))
        assert fidelity(zero, plus) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert bures_distance(zero, plus) == pytest.approx(math.sqrt(1 - 1 / math.sqrt(2)), abs=1e-9)
        assert bures_distance(zero, plus) == pytest.approx(0.5412, abs=1e-4)
        assert trace_distance(zero, plus) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_mixed_and_pure_agree(self):
        """测试纯态与密度矩阵两条路径结果一致"""
        psi = random_pure_state(2, seed=3)
        phi = random_pure_state(2, seed=4)
        assert fidelity(psi, phi) == pytest.approx(fidelity(psi.density(), phi.density()), abs=1e-8)
        assert fidelity(psi, phi.density()) == pytest.approx(fidelity(psi, phi), abs=1e-8)

    def test_label_mismatch(self):
        """测试标签不一致时报错"""
        a = random_pure_state(1, seed=1, labels=(0,))
        b = random_pure_state(1, seed=1, labels=(1,))
        with pytest.raises(InvalidArgumentError):
            fidelity(a, b)

    def test_fuchs_van_de_graaf_random(self):
        """测试随机混态对满足 Fuchs-van de Graaf 关系"""
        for seed in range(200):
            rho = random_density_matrix(2, seed=2 * seed)
            sigma = random_density_matrix(2, seed=2 * seed + 1, rank=1 + seed % 4)
            report = check_fuchs_van_de_graaf(rho, sigma)
            assert report.passed, report.to_dict()

    def test_bures_triangle_inequality(self):
        """测试 Bures 距离的三角不等式"""
        for seed in range(50):
            rho, sigma, tau = (random_density_matrix(2, seed=3 * seed + i) for i in range(3))
            lhs = bures_distance(rho, tau)
            assert lhs <= bures_distance(rho, sigma) + bures_distance(sigma, tau) + 1e-8


class TestPartialTraceAndEntropy:
    """偏迹与熵测试套件"""

    def test_bell_marginal_is_maximally_mixed(self):
        """测试 Bell 态的约化态"""
        marginal = partial_trace(_bell(), [1])
        assert marginal.labels == (1,)
        np.testing.assert_allclose(marginal.data, np.eye(2) / 2, atol=1e-12)
        assert entropy(marginal) == pytest.approx(math.log(2), abs=1e-12)

    def test_partial_trace_is_consistent(self):
        """测试逐步取迹与一次取迹一致"""
        rho = random_density_matrix(3, seed=11)
        once = partial_trace(rho, [0, 2])
        twice = partial_trace(partial_trace(rho, [0, 1, 2]), [2, 0])
        np.testing.assert_allclose(once.data, twice.data, atol=1e-12)
        assert once.labels == (0, 2)

    def test_partial_trace_unknown_label(self):
        """测试未知标签"""
        with pytest.raises(InvalidArgumentError):
            partial_trace(_bell(), [5])

    def test_pure_state_entropy(self):
        """测试纯态熵为零"""
        assert entropy(_bell()) == 0.0
        assert entropy(_bell().density()) == pytest.approx(0.0, abs=1e-10)

    def test_mutual_information(self):
        """测试 Bell 与 GHZ 态的互信息"""
        assert mutual_information(_bell(), [0], [1]) == pytest.approx(2 * math.log(2), abs=1e-10)
        assert mutual_information(_ghz(), [0], [1]) == pytest.approx(math.log(2), abs=1e-10)
        assert mutual_information(_ghz(), [0], [1, 2]) == pytest.approx(2 * math.log(2), abs=1e-10)
        with pytest.raises(InvalidArgumentError):
            mutual_information(_ghz(), [0, 1], [1])

    def test_state_matrix_binary_format(self):
        """测试密度矩阵二进制格式"""
        rho = random_density_matrix(2, seed=5, labels=(3, 7))
        restored = StateMatrix.from_bytes(rho.to_bytes())
        assert restored.labels == (3, 7)
        np.testing.assert_array_equal(restored.data, rho.data)
        with pytest.raises(InvalidArgumentError):
            StateMatrix.from_bytes(b"XXXX" + rho.to_bytes()[4:])

    def test_state_matrix_json_form(self):
        """测试密度矩阵 JSON 调试格式"""
        rho = random_density_matrix(1, seed=2, labels=(4,))
        restored = StateMatrix.from_json(rho.to_json())
        assert restored.labels == (4,)
        np.testing.assert_allclose(restored.data, rho.data, atol=1e-15)

    def test_state_validation(self):
        """测试非法态"""
        with pytest.raises(InvalidArgumentError):
            StateMatrix(np.array([[1, 1], [0, 0]]), (0,))
        with pytest.raises(InvalidArgumentError):
            StateMatrix(np.eye(2) / 2, (1, 0))
        with pytest.raises(InvalidArgumentError):
            StateMatrix(np.diag([1.5, -0.5]), (0,)).validate()
        with pytest.raises(InvalidArgumentError):
            PureState(np.array([1, 1]), (0,))


class TestBounds:
    """连续性界测试套件"""

    def test_mi_continuity_value(self):
        """测试 9 t log(d_A / t) 的数值"""
        assert mi_continuity_bound(0.1, 2) == pytest.approx(9 * 0.1 * math.log(20), rel=1e-12)
        assert mi_continuity_bound(0.1, 2) == pytest.approx(2.696, abs=1e-3)
        assert mi_continuity_bound(0.0, 2) == 0.0

    def test_mi_continuity_domain(self):
        """测试定义域之外的输入"""
        with pytest.raises(OutOfDomainError):
            mi_continuity_bound(0.5, 2)
        with pytest.raises(OutOfDomainError):
            mi_continuity_bound(-0.1, 2)
        with pytest.raises(InvalidArgumentError):
            mi_continuity_bound(0.1, 1)

    def test_mi_continuity_holds_on_random_pairs(self):
        """测试随机态对的互信息差不超过连续性界"""
        checked = 0
        for seed in range(120):
            rho = random_density_matrix(2, seed=seed)
            other = random_density_matrix(2, seed=1000 + seed)
            sigma = _mix(rho, other, 0.05 + 0.35 * (seed % 7) / 6)
            t = trace_distance(rho, sigma)
            if t == 0:
                continue
            diff = abs(mutual_information(rho, [0], [1]) - mutual_information(sigma, [0], [1]))
            assert diff <= mi_continuity_bound(t, 2) + 1e-9
            checked += 1
        assert checked >= 100

    def test_mi_correctability_value(self):
        """测试可纠错互信息上界的数值与定义域"""
        expected = 18 * math.sqrt(2) * 0.01 * math.log(2 / (2 * math.sqrt(2) * 0.01))
        assert mi_correctability_bound(1, 0.01) == pytest.approx(expected, rel=1e-12)
        assert mi_correctability_bound(1, 0.01) == pytest.approx(1.083, abs=2e-3)
        with pytest.raises(OutOfDomainError):
            mi_correctability_bound(1, 0.0)
        with pytest.raises(OutOfDomainError):
            mi_correctability_bound(1, 0.5)


class TestRandomStates:
    """可复现随机态测试套件"""

    def test_seeded_states_are_reproducible(self):
        """测试同一种子得到同一结果"""
        np.testing.assert_array_equal(haar_unitary(4, seed=9), haar_unitary(4, seed=9))
        np.testing.assert_array_equal(random_pure_state(3, seed=2).vector, random_pure_state(3, seed=2).vector)

    def test_haar_unitary_is_unitary(self):
        """测试 Haar 酉矩阵"""
        u = haar_unitary(8, seed=1)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-12)

    def test_random_density_matrix_is_valid(self):
        """测试随机密度矩阵与指定秩"""
        rho = random_density_matrix(2, seed=7, rank=1)
        rho.validate()
        assert np.linalg.matrix_rank(rho.data, tol=1e-10) == 1
