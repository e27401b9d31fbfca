#!/usr/bin/env python3
"""
稳定子码与码空间单元测试
Test the code zoo, logical operators, distances and perturbed code spaces
"""

import itertools
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.codes import Gate, LocalCircuit, PauliOperator
from models.errors import CapacityError, InvalidArgumentError
from services.code_service import (
    brickwork_circuit,
    clean_logical,
    code_space,
    distance_by_weight_enumeration,
    five_qubit_code,
    get_code,
    load_code_file,
    logical_operators,
    maximally_mixed_code_state,
    perturb,
    projector_from_stabilizers,
    random_code_state,
    region_supports_logical,
    repetition_code,
    single_qubit_rotation,
    stabilizer_distance,
    toric_code,
)
from services.quantum_kernel import entropy, partial_trace


class TestPauliOperator:
    """Pauli 算符测试套件"""

    def test_string_round_trip(self):
        """测试字符串表示"""
        p = PauliOperator.from_string("XZZXI")
        assert str(p) == "+XZZXI"
        assert p.support == (0, 1, 2, 3)
        assert p.weight == 4

    def test_product_and_commutation(self):
        """测试乘积相位与对易关系"""
        x = PauliOperator.from_string("X")
        z = PauliOperator.from_string("Z")
        assert not x.commutes_with(z)
        np.testing.assert_allclose((x * z).to_matrix(), x.to_matrix() @ z.to_matrix(), atol=1e-12)
        xx = PauliOperator.from_string("XX")
        zz = PauliOperator.from_string("ZZ")
        assert xx.commutes_with(zz)

    def test_apply_matches_matrix(self):
        """测试不构造矩阵的作用与稠密矩阵一致"""
        p = PauliOperator.from_string("YXZ")
        cols = np.random.default_rng(0).standard_normal((8, 2)) + 0j
        np.testing.assert_allclose(p.apply(cols), p.to_matrix() @ cols, atol=1e-12)

    def test_invalid_letter(self):
        """测试非法字符"""
        with pytest.raises(InvalidArgumentError):
            PauliOperator.from_string("XQ")


class TestCodeZoo:
    """码库测试套件"""

    @pytest.mark.parametrize("name,n,k,d", [
        ("five-qubit", 5, 1, 3),
        ("toric-2x2", 8, 2, 2),
        ("repetition-4", 4, 1, 1),
    ])
    def test_parameters_and_distance(self, name, n, k, d):
        """测试 [[n, k, d]] 参数"""
        code = get_code(name)
        assert (code.n, code.k) == (n, k)
        assert stabilizer_distance(code) == d
        assert distance_by_weight_enumeration(code) == d

    @pytest.mark.slow
    def test_toric_3x3_distance(self):
        """测试 3x3 环面码的距离"""
        code = toric_code(3, 3)
        assert (code.n, code.k) == (18, 2)
        assert stabilizer_distance(code) == 3
        assert distance_by_weight_enumeration(code) == 3

    def test_unknown_code(self):
        """测试未知的码名称"""
        with pytest.raises(InvalidArgumentError):
            get_code("no-such-code")

    def test_invalid_generators(self):
        """测试不对易或相关的生成元"""
        from models.codes import StabilizerCode
        from models.lattice import Lattice

        lat = Lattice.open(1, 2)
        with pytest.raises(InvalidArgumentError):
            StabilizerCode("bad", np.array([PauliOperator.from_string("XI").vector,
                                             PauliOperator.from_string("ZI").vector]), lat, ((0,), (1,)))
        with pytest.raises(InvalidArgumentError):
            StabilizerCode("bad", np.array([PauliOperator.from_string("ZZ").vector,
                                             PauliOperator.from_string("ZZ").vector]), lat, ((0,), (1,)))

    def test_load_code_file(self, tmp_path):
        """测试从文本文件读取稳定子码"""
        path = tmp_path / "cyclic.txt"
        path.write_text("# five-qubit\nXZZXI\nIXZZX\nXIXZZ\nZXIXZ\n", encoding="utf-8")
        code = load_code_file(str(path))
        assert code.name == "cyclic"
        assert (code.n, code.k) == (5, 1)
        assert stabilizer_distance(code) == 3
        assert get_code(str(path)).fingerprint() == code.fingerprint()

    def test_load_binary_rows(self, tmp_path):
        """测试辛二进制格式"""
        path = tmp_path / "rep.txt"
        path.write_text("000|110\n000|011\n", encoding="utf-8")
        code = load_code_file(str(path))
        assert code.fingerprint() == repetition_code(3).fingerprint()
        assert stabilizer_distance(code) == 1

    def test_qubits_in_out_of_range(self):
        """测试越界的量子比特编号"""
        with pytest.raises(InvalidArgumentError):
            five_qubit_code().qubits_in([5])


class TestLogicals:
    """逻辑算符测试套件"""

    @pytest.mark.parametrize("name", ["five-qubit", "toric-2x2", "repetition-4"])
    def test_logical_algebra(self, name):
        """测试 X_j 与 Z_j 反对易且与所有生成元对易"""
        code = get_code(name)
        ops = logical_operators(code)
        assert len(ops) == 2 * code.k
        gens = code.generator_paulis()
        for op in ops:
            assert all(op.commutes_with(g) for g in gens)
        for i, j in itertools.combinations(range(len(ops)), 2):
            paired = i // 2 == j // 2
            assert ops[i].commutes_with(ops[j]) != paired

    def test_five_qubit_pairs_are_correctable(self):
        """测试五比特码任意两比特区域不支撑逻辑算符"""
        code = five_qubit_code()
        assert not any(region_supports_logical(code, pair) for pair in itertools.combinations(range(5), 2))
        assert any(region_supports_logical(code, triple) for triple in itertools.combinations(range(5), 3))
        assert not region_supports_logical(code, [])

    def test_toric_row_supports_logical(self):
        """测试环面码一行水平边支撑逻辑算符"""
        code = toric_code(2, 2)
        assert region_supports_logical(code, [0, 1])
        assert not region_supports_logical(code, [0])

    def test_clean_logical(self):
        """测试把逻辑算符移出区域"""
        code = toric_code(2, 2)
        for logical in logical_operators(code):
            moved = clean_logical(code, logical, [0])
            assert moved is not None
            assert 0 not in moved.support
            gens = code.generator_paulis()
            assert all(moved.commutes_with(g) for g in gens)


class TestCodeSpace:
    """码空间测试套件"""

    @pytest.mark.parametrize("name", ["five-qubit", "toric-2x2"])
    def test_projector(self, name):
        """测试 Π 幂等、迹为 2^k、被生成元固定"""
        code = get_code(name)
        space = projector_from_stabilizers(code)
        pi = space.projector
        np.testing.assert_allclose(pi @ pi, pi, atol=1e-10)
        assert np.trace(pi).real == pytest.approx(2 ** code.k, abs=1e-9)
        for g in code.generator_paulis():
            np.testing.assert_allclose(g.apply(pi), pi, atol=1e-10)

    def test_logicals_preserve_code_space(self):
        """测试逻辑算符与 Π 对易"""
        space = projector_from_stabilizers(five_qubit_code())
        pi = space.projector
        for logical in space.logicals:
            u = space.logical_matrix(logical)
            np.testing.assert_allclose(u @ pi, pi @ u, atol=1e-10)

    def test_dense_limit(self):
        """测试超过稠密上限时报错"""
        space = code_space(toric_code(3, 3))
        with pytest.raises(CapacityError):
            _ = space.projector
        with pytest.raises(CapacityError):
            projector_from_stabilizers(toric_code(3, 3))

    def test_maximally_mixed_purification(self):
        """测试纯化后 R 的熵为 k log 2"""
        space = code_space(toric_code(2, 2))
        rho, purification = maximally_mixed_code_state(space)
        assert np.trace(rho.data).real == pytest.approx(1.0, abs=1e-12)
        reference = partial_trace(purification, [8, 9])
        assert entropy(reference) == pytest.approx(2 * math.log(2), abs=1e-9)

    def test_random_code_state(self):
        """测试随机码态可复现且位于码空间内"""
        space = projector_from_stabilizers(five_qubit_code())
        a = random_code_state(space, 3)
        b = random_code_state(space, 3)
        np.testing.assert_array_equal(a.vector, b.vector)
        system = partial_trace(a, range(5)).data
        pi = space.projector
        np.testing.assert_allclose(pi @ system @ pi, system, atol=1e-10)


class TestPerturbation:
    """局域微扰测试套件"""

    def test_single_rotation(self):
        """测试单比特旋转后的码空间"""
        space = projector_from_stabilizers(five_qubit_code())
        rotated = perturb(space, single_qubit_rotation(0, 0.05))
        assert rotated.is_perturbed
        assert np.trace(rotated.projector).real == pytest.approx(2.0, abs=1e-9)
        assert np.max(np.abs(rotated.projector - space.projector)) > 1e-3
        assert rotated.fingerprint() != space.fingerprint()

    def test_identity_circuit(self):
        """测试空线路不改变码空间"""
        space = code_space(five_qubit_code())
        assert perturb(space, LocalCircuit()) is space
        assert brickwork_circuit(five_qubit_code(), 0.0).is_identity

    def test_gate_out_of_range(self):
        """测试门越界"""
        space = code_space(five_qubit_code())
        with pytest.raises(InvalidArgumentError):
            perturb(space, single_qubit_rotation(7, 0.1))

    def test_non_unitary_gate(self):
        """测试非幺正门"""
        with pytest.raises(InvalidArgumentError):
            Gate((0,), np.array([[1, 1], [0, 1]]))

    def test_brickwork_gates_are_local(self):
        """测试砖墙线路只作用于最近邻"""
        code = toric_code(2, 2)
        circuit = brickwork_circuit(code, 0.1, depth=2, family="random", seed=5)
        assert circuit.gates
        shortest = circuit.radius(code)
        assert shortest == pytest.approx(math.sqrt(2) / 2)
        again = brickwork_circuit(code, 0.1, depth=2, family="random", seed=5)
        for g, h in zip(circuit.gates, again.gates):
            np.testing.assert_array_equal(g.unitary, h.unitary)

    def test_disjoint_gates_commute(self):
        """测试不相交的门可交换"""
        code = five_qubit_code()
        circuit = brickwork_circuit(code, 0.2, family="heisenberg")
        a, b = (g for g in circuit.gates if g.qubits in ((0, 1), (2, 3)))
        forward = LocalCircuit((a, b)).unitary(5)
        backward = LocalCircuit((b, a)).unitary(5)
        np.testing.assert_allclose(forward, backward, atol=1e-12)
