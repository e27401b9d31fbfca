#!/usr/bin/env python3
"""
格点几何单元测试
Test lattice regions, shells and partition constructions
"""

import itertools
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.errors import InvalidArgumentError
from models.lattice import Lattice, Region
from services.geometry_service import (
    boundary_shell,
    checkerboard_partition,
    four_square_partition,
    logical_support_grid,
    neighborhood,
    ring_sequence,
    winding_rank,
)


class TestNeighborhoods:
    """邻域与壳层测试套件"""

    @pytest.fixture
    def grid(self):
        return Lattice.open(2, 9)

    def test_neighborhood_sizes(self, grid):
        """测试二维开边界格点上单点邻域的大小"""
        centre = Region(grid, ((4, 4),))
        assert len(neighborhood(centre, 0)) == 1
        assert len(neighborhood(centre, 1)) == 5
        assert len(neighborhood(centre, 2)) == 13

    def test_boundary_shell_sizes(self, grid):
        """测试壳层 B = A^{+ℓ} \\ A"""
        centre = Region(grid, ((4, 4),))
        assert len(boundary_shell(centre, 1)) == 4
        assert len(boundary_shell(centre, 2)) == 12
        assert (4, 4) not in boundary_shell(centre, 1)

    def test_shell_of_whole_lattice_is_empty(self, grid):
        """测试整个格点的壳层为空"""
        assert boundary_shell(grid.full_region(), 1).is_empty()
        assert boundary_shell(grid.empty_region(), 1).is_empty()

    def test_invalid_radius(self, grid):
        """测试非法半径"""
        centre = Region(grid, ((4, 4),))
        with pytest.raises(InvalidArgumentError):
            neighborhood(centre, -1)
        with pytest.raises(InvalidArgumentError):
            boundary_shell(centre, 0)

    def test_lattice_mismatch(self, grid):
        """测试来自不同格点的区域"""
        other = Lattice.open(2, 5)
        with pytest.raises(InvalidArgumentError):
            neighborhood(Region(grid, ((0, 0),)), 1, other)
        with pytest.raises(InvalidArgumentError):
            Region(grid, ((0, 0),)).union(Region(other, ((0, 0),)))

    def test_open_boundary_clips(self):
        """测试开边界上的邻域被截断"""
        corner = Region(Lattice.open(2, 5), ((0, 0),))
        assert len(neighborhood(corner, 1)) == 3

    def test_torus_wraps(self):
        """测试周期边界上的邻域绕回"""
        lat = Lattice.torus(2, 5)
        corner = Region(lat, ((0, 0),))
        shell = boundary_shell(corner, 1)
        assert len(shell) == 4
        assert (4, 0) in shell and (0, 4) in shell

    def test_neighborhood_composition(self, grid):
        """测试 (A^{+a})^{+b} ⊆ A^{+(a+b)}，单位步长时相等"""
        regions = [
            Region(grid, ((4, 4),)),
            Region(grid, ((1, 2), (6, 7))),
            Region(grid, ((0, 0), (0, 1), (1, 0))),
        ]
        for region, (a, b) in itertools.product(regions, [(1, 1), (1, 2), (1.5, 0.5)]):
            nested = neighborhood(neighborhood(region, a), b)
            direct = neighborhood(region, a + b)
            assert nested.site_set <= direct.site_set
            if (a, b) == (1, 1):
                assert nested == direct

    def test_ring_sequence_grows(self, grid):
        """测试逐层加壳的区域单调增长"""
        rings = ring_sequence(Region(grid, ((4, 4),)), 1, 3)
        assert len(rings.regions) == 4
        assert rings.shell_sizes == (4, 8, 12)
        for inner, outer in zip(rings.regions, rings.regions[1:]):
            assert inner.site_set < outer.site_set

    def test_region_set_operations(self, grid):
        """测试区域的并、差、交与补"""
        a = Region(grid, ((0, 0), (0, 1)))
        b = Region(grid, ((0, 1), (0, 2)))
        assert len(a.union(b)) == 3
        assert a.difference(b).sites == ((0, 0),)
        assert a.intersection(b).sites == ((0, 1),)
        assert len(a.complement()) == grid.n_sites - 2
        assert a.distance_to(grid.empty_region()) == float("inf")
        assert Region.from_literal(grid, a.to_literal()) == a


class TestPartitions:
    """划分构造测试套件"""

    def test_checkerboard_counts(self):
        """测试 L=10、方块边长 4、间隔 1 的棋盘划分"""
        plan = checkerboard_partition(Lattice.open(2, 10), 4, 1)
        assert len(plan.names_with_role("x_cell")) == 2
        assert len(plan.names_with_role("y_cell")) == 2
        assert len(plan.regions["Z"]) == 36
        report = plan.verify()
        assert report["ok"], report

    def test_partition_plan_json(self):
        """测试划分的 JSON 形式：区域字面量与实测间隔"""
        lat = Lattice.open(2, 10)
        plan = checkerboard_partition(lat, 4, 1)
        payload = json.loads(json.dumps(plan.to_json()))
        assert sorted(payload["regions"]) == sorted(plan.regions)
        assert payload["roles"]["Z"] == "z_bar"
        assert len(Region.from_literal(lat, payload["regions"]["Z"])) == 36
        assert payload["separations"]["x_cell"] >= 1.0
        assert payload["metadata"]["cell_side"] == 4

    def test_checkerboard_requires_divisibility(self):
        """测试边长不整除时给出建议"""
        with pytest.raises(InvalidArgumentError, match="cell_side"):
            checkerboard_partition(Lattice.open(2, 10), 3, 1)

    def test_four_square_partition(self):
        """测试环面四方块划分的覆盖与间隔"""
        lat = Lattice.torus(2, 8)
        plan = four_square_partition(lat, 2)
        report = plan.verify()
        assert report["ok"], report
        assert len(plan.names_with_role("x_square")) == 2
        assert len(plan.names_with_role("y_square")) == 2
        assert len(plan.names_with_role("corner_disk")) == 4
        assert plan.metadata["disk_radius"] >= 1
        assert plan.metadata["empty_corners"] == []
        assert all(not plan.regions[name].is_empty() for name in plan.names_with_role("corner_disk"))

    def test_four_square_records_empty_corners(self):
        """测试 ℓ = 1 时对角方块已相距 √2，角点圆盘不含站点并记录在元数据中"""
        plan = four_square_partition(Lattice.torus(2, 8), 1)
        assert plan.metadata["disk_radius"] == 0.5
        assert plan.metadata["empty_corners"] == ["Z0", "Z1", "Z2", "Z3"]
        assert plan.regions["Z0"].is_empty()
        assert len(plan.role_union("x_square")) + len(plan.role_union("y_square")) == 64

    def test_four_square_rejects_bad_input(self):
        """测试非法的四方块参数"""
        with pytest.raises(InvalidArgumentError):
            four_square_partition(Lattice.torus(2, 8), 0)
        with pytest.raises(InvalidArgumentError):
            four_square_partition(Lattice.torus(2, 8), 4)
        with pytest.raises(InvalidArgumentError):
            four_square_partition(Lattice.open(2, 8), 1)
        with pytest.raises(InvalidArgumentError):
            four_square_partition(Lattice.torus(2, 7), 1)

    def test_winding_rank(self):
        """测试非可缩回路的方向数"""
        lat = Lattice.torus(2, 8)
        assert winding_rank(lat.full_region()) == 2
        assert winding_rank(Region(lat, tuple((x, 0) for x in range(8)))) == 1
        assert winding_rank(Region(lat, ((3, 3),))) == 0
        assert winding_rank(Region(Lattice.open(2, 8), tuple((x, 0) for x in range(8)))) == 0

    def test_logical_support_grid(self):
        """测试逻辑支撑网格：单点方块与间隔"""
        plan = logical_support_grid(Lattice.open(2, 10), 8, 1)
        assert plan.metadata["cell_side"] == 1
        assert len(plan.names_with_role("x_cell")) == 25
        assert plan.metadata["y_size"] == 75
        assert plan.verify()["ok"]

    def test_logical_support_shrinks_with_distance(self):
        """测试 d 增大时 Y 不增大"""
        lat = Lattice.open(2, 10)
        sizes = [logical_support_grid(lat, d, 1).metadata["y_size"] for d in (4, 8, 16)]
        assert sizes == sorted(sizes, reverse=True)
        assert sizes[-1] == 64

    def test_logical_support_rejects_bad_input(self):
        """测试非法的逻辑支撑参数"""
        with pytest.raises(InvalidArgumentError):
            logical_support_grid(Lattice.open(1, 10), 4, 1)
        with pytest.raises(InvalidArgumentError):
            logical_support_grid(Lattice.open(2, 10), 4, 0)
        with pytest.raises(InvalidArgumentError):
            logical_support_grid(Lattice.open(2, 10), 1, 1)
