#!/usr/bin/env python3
"""
最坏码态搜索单元测试
Test the candidate list, restarts and budget handling of the code-state search
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.errors import InvalidArgumentError
from services.search_service import (
    SearchBudget,
    maximize_over_code_states,
    pack,
    standard_candidates,
    unpack,
)


def corner_weight(v: np.ndarray) -> float:
    """|V[1,1]|²：没有固定候选态能取到最大值 1"""
    return float(abs(v[1, 1]) ** 2)


class TestSearchBudget:
    """搜索预算测试套件"""

    def test_invalid_budget(self):
        """测试非法预算"""
        with pytest.raises(InvalidArgumentError):
            SearchBudget(restarts=-1)
        with pytest.raises(InvalidArgumentError):
            SearchBudget(max_iterations=0)
        with pytest.raises(InvalidArgumentError):
            SearchBudget(tolerance=0.0)

    def test_reseeded_is_deterministic(self):
        """测试按任务键派生的种子可复现且互不相同"""
        budget = SearchBudget(restarts=2, seed=7)
        assert budget.reseeded("mu", 1).seed == budget.reseeded("mu", 1).seed
        assert budget.reseeded("mu", 1).seed != budget.reseeded("mu", 2).seed
        assert budget.reseeded("mu", 1).restarts == 2
        assert SearchBudget.candidates_only(3).restarts == 0


class TestMaximize:
    """最大化测试套件"""

    def test_candidates(self):
        """测试固定候选态的形状与归一化"""
        for label, v in standard_candidates(4):
            assert v.shape == (4, 4)
            assert np.linalg.norm(v) == pytest.approx(1.0)
        assert [label for label, _ in standard_candidates(2)][0] == "maximally_entangled"

    def test_pack_unpack(self):
        """测试实参数化"""
        v = standard_candidates(2)[0][1]
        np.testing.assert_allclose(unpack(pack(v), 2), v, atol=1e-12)

    def test_candidates_only(self):
        """测试 restarts = 0 只评估候选态"""
        result = maximize_over_code_states(corner_weight, 2, SearchBudget.candidates_only())
        assert result.value == pytest.approx(0.5)
        assert result.label == "maximally_entangled"
        assert result.iterations == 0

    def test_restarts_find_the_maximum(self):
        """测试重启优化找到最大值"""
        result = maximize_over_code_states(corner_weight, 2, SearchBudget(restarts=2, seed=1))
        assert result.value >= 0.999
        assert len(result.history) == 2
        assert abs(result.state[1, 1]) ** 2 == pytest.approx(result.value, abs=1e-9)

    def test_budget_is_monotone(self):
        """测试更大的预算不会降低结果"""
        small = maximize_over_code_states(corner_weight, 2, SearchBudget.candidates_only(5))
        large = maximize_over_code_states(corner_weight, 2, SearchBudget(restarts=3, seed=5))
        assert large.value >= small.value

    def test_extra_candidates(self):
        """测试追加候选态"""
        best = np.zeros((2, 2), dtype=complex)
        best[1, 1] = 1.0
        result = maximize_over_code_states(corner_weight, 2, SearchBudget.candidates_only(),
                                           [("known", best)])
        assert result.label == "known"
        assert result.value == pytest.approx(1.0)

    def test_same_seed_same_result(self):
        """测试同一种子结果一致"""
        budget = SearchBudget(restarts=2, max_iterations=30, seed=11)
        a = maximize_over_code_states(corner_weight, 2, budget)
        b = maximize_over_code_states(corner_weight, 2, budget)
        assert a.value == b.value
        assert a.label == b.label
        assert a.summary() == b.summary()
