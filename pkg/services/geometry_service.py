"""
格点几何服务
Region arithmetic and the partition constructions used by the tradeoff bounds:
neighborhoods and shells, ring growth, checkerboard tilings, the four-square torus
split and the logical-support cell grid.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from models.errors import InvalidArgumentError
from models.lattice import Lattice, PartitionPlan, Region, Site

logger = logging.getLogger(__name__)

_EPS = 1e-9


@dataclass(frozen=True)
class RingSequence:
    """嵌套区域序列 A0 ⊂ A0B1 ⊂ ... 以及每一步新增壳层的大小"""
    regions: Tuple[Region, ...]
    shell_sizes: Tuple[int, ...]


def _offsets(lattice: Lattice, ell: float) -> List[Tuple[int, ...]]:
    """Integer offsets whose physical length is at most ell."""
    reach = int(math.floor(ell / lattice.spacing + _EPS))
    out = []
    for offset in itertools.product(range(-reach, reach + 1), repeat=lattice.dimension):
        if math.sqrt(sum(o * o for o in offset)) * lattice.spacing <= ell + _EPS:
            out.append(offset)
    return out


def neighborhood(region: Region, ell: float, lattice: Optional[Lattice] = None) -> Region:
    """
    A^{+ell}: all sites within distance ell of the region (ell >= 0)

    Args:
        region: 区域
        ell: 半径（物理单位）
        lattice: 调用方期望的格点，不一致时报错
    """
    if lattice is not None and region.lattice != lattice:
        raise InvalidArgumentError("区域来自不同的格点")
    if ell < 0:
        raise InvalidArgumentError(f"ell 必须非负，收到 {ell}")
    lat = region.lattice
    found = set(region.sites)
    offsets = _offsets(lat, ell)
    for site in region.sites:
        for offset in offsets:
            moved = lat.wrap(c + o for c, o in zip(site, offset))
            if moved is not None:
                found.add(moved)
    return Region(lat, tuple(found))


def boundary_shell(region: Region, ell: float) -> Region:
    """B = A^{+ell} \\ A"""
    if ell <= 0:
        raise InvalidArgumentError(f"ell 必须为正，收到 {ell}")
    if region.is_empty():
        return region
    return neighborhood(region, ell).difference(region)


def ring_sequence(seed: Region, ell: float, steps: int) -> RingSequence:
    """逐层加壳：每一步新增的是前一并集的 ell 壳层"""
    if steps < 1:
        raise InvalidArgumentError("steps 必须 ≥ 1")
    if ell <= 0:
        raise InvalidArgumentError("ell 必须为正")
    regions = [seed]
    sizes = []
    current = seed
    for _ in range(steps):
        shell = boundary_shell(current, ell)
        sizes.append(len(shell))
        current = current.union(shell)
        regions.append(current)
    return RingSequence(tuple(regions), tuple(sizes))


def _suggest_cell_side(length: int, gap: int) -> int:
    periods = [p for p in range(gap + 1, length + 1) if length % p == 0]
    if not periods:
        return 1
    return max(1, min(periods, key=lambda p: abs(p - gap - 1)) - gap)


def checkerboard_partition(lat: Lattice, cell_side: int, gap: int) -> PartitionPlan:
    """
    棋盘划分：X 为一种颜色的方块，Y 为另一种，Z 为宽度 gap 的条带网格

    Cells are full hypercubes of side cell_side placed with period cell_side + gap
    on every axis; the block parity decides the colour.
    """
    if cell_side < 1 or gap < 1:
        raise InvalidArgumentError("cell_side 与 gap 必须为正整数")
    period = cell_side + gap
    for axis, length in enumerate(lat.extents):
        if length % period:
            suggestion = _suggest_cell_side(length, gap)
            raise InvalidArgumentError(
                f"轴 {axis}: cell_side + gap = {period} 不整除 L = {length}；建议 cell_side = {suggestion}"
            )
    blocks_per_axis = [length // period for length in lat.extents]
    regions: Dict[str, Region] = {}
    roles: Dict[str, str] = {}
    cell_sites = set()
    for index in itertools.product(*(range(b) for b in blocks_per_axis)):
        ranges = [range(i * period, i * period + cell_side) for i in index]
        sites = tuple(itertools.product(*ranges))
        cell_sites.update(sites)
        role = "x_cell" if sum(index) % 2 == 0 else "y_cell"
        name = f"{role[0].upper()}[{','.join(str(i) for i in index)}]"
        regions[name] = Region(lat, sites)
        roles[name] = role
    regions["Z"] = Region(lat, tuple(s for s in lat.sites() if s not in cell_sites))
    roles["Z"] = "z_bar"
    plan = PartitionPlan(
        lat,
        regions,
        roles,
        {"x_cell": float(gap), "y_cell": float(gap)},
        {"cell_side": cell_side, "gap": gap, "blocks_per_axis": blocks_per_axis},
    )
    logger.debug(f"棋盘划分: {len(regions) - 1} 个方块, |Z| = {len(regions['Z'])}")
    return plan


def _corner_points(lat: Lattice) -> List[Tuple[float, ...]]:
    half = lat.extents[0] // 2
    coords = [-0.5, half - 0.5]
    return list(itertools.product(coords, coords))


def four_square_partition(lat: Lattice, ell: float) -> PartitionPlan:
    """
    环面四方块划分：对角两块为 X，另两块为 Y，四个角点圆盘为 Z

    The disks are centred where all four squares meet. Their radius starts at
    ell / 2 and grows in half-steps until the two X squares, and likewise the two
    Y squares, are at least ell apart; the realised radius is recorded. When the
    squares are already ell apart at a radius below the nearest site, the disks
    stay empty and are listed under metadata["empty_corners"].
    """
    if lat.dimension != 2 or not all(lat.periodic):
        raise InvalidArgumentError("four_square_partition 需要二维周期格点")
    length = lat.extents[0]
    if lat.extents[1] != length or length % 2:
        raise InvalidArgumentError("需要边长为偶数的正方环面")
    if ell <= 0 or ell >= length * lat.spacing / 2:
        raise InvalidArgumentError(f"需要 0 < ell < L/2，收到 ell = {ell}")
    half = length // 2
    quadrant = {}
    for site in lat.sites():
        quadrant[site] = (site[0] // half, site[1] // half)
    corners = np.asarray(_corner_points(lat))

    def corner_distance(site):
        return lat.pairwise_distances([site], corners).min()

    distances = {site: corner_distance(site) for site in lat.sites()}
    radius = ell / 2
    while True:
        disk = {s for s, d in distances.items() if d <= radius + _EPS}
        squares = {}
        for key in [(0, 0), (1, 1), (0, 1), (1, 0)]:
            squares[key] = Region(lat, tuple(s for s, q in quadrant.items() if q == key and s not in disk))
        x_gap = squares[(0, 0)].distance_to(squares[(1, 1)])
        y_gap = squares[(0, 1)].distance_to(squares[(1, 0)])
        if min(x_gap, y_gap) >= ell - _EPS:
            break
        radius += lat.spacing / 2
    regions: Dict[str, Region] = {
        "X0": squares[(0, 0)],
        "X1": squares[(1, 1)],
        "Y0": squares[(0, 1)],
        "Y1": squares[(1, 0)],
    }
    roles = {"X0": "x_square", "X1": "x_square", "Y0": "y_square", "Y1": "y_square"}
    nearest = {s: int(np.argmin(lat.pairwise_distances([s], corners)[0])) for s in disk}
    for i in range(len(corners)):
        regions[f"Z{i}"] = Region(lat, tuple(s for s, j in nearest.items() if j == i))
        roles[f"Z{i}"] = "corner_disk"
    empty = [f"Z{i}" for i in range(len(corners)) if regions[f"Z{i}"].is_empty()]
    if empty:
        logger.warning(f"⚠️ 半径 {radius} 的角点圆盘不含站点: {empty}，Z 退化")
    return PartitionPlan(
        lat,
        regions,
        roles,
        {"x_square": float(ell), "y_square": float(ell)},
        {"ell": ell, "disk_radius": radius, "empty_corners": empty},
    )


def winding_rank(region: Region) -> int:
    """
    区域所含非可缩回路的方向数

    Breadth-first search on nearest-neighbour adjacency tracking lifted coordinates;
    revisiting a site with a different lift exposes a winding vector. Returns the rank
    of the collected winding vectors.
    """
    lat = region.lattice
    members = region.site_set
    lift: Dict[Site, Tuple[int, ...]] = {}
    windings = []
    steps = []
    for axis in range(lat.dimension):
        for sign in (1, -1):
            step = [0] * lat.dimension
            step[axis] = sign
            steps.append(tuple(step))
    for start in region.sites:
        if start in lift:
            continue
        lift[start] = (0,) * lat.dimension
        queue = [start]
        while queue:
            site = queue.pop(0)
            for step in steps:
                raw = [c + s for c, s in zip(site, step)]
                moved = lat.wrap(raw)
                if moved is None or moved not in members:
                    continue
                crossing = tuple(
                    (r - m) // e for r, m, e in zip(raw, moved, lat.extents)
                )
                new_lift = tuple(a + b for a, b in zip(lift[site], crossing))
                if moved not in lift:
                    lift[moved] = new_lift
                    queue.append(moved)
                elif lift[moved] != new_lift:
                    windings.append([a - b for a, b in zip(new_lift, lift[moved])])
    if not windings:
        return 0
    return int(np.linalg.matrix_rank(np.asarray(windings, dtype=float)))


def _cube_shell_size(dimension: int, side: int, ell: float, spacing: float) -> int:
    margin = int(math.ceil(ell / spacing)) + 1
    size = side + 2 * margin
    probe = Lattice.open(dimension, size, spacing)
    cube = Region(probe, tuple(itertools.product(*(range(margin, margin + side) for _ in range(dimension)))))
    return len(boundary_shell(cube, ell))


def logical_support_cell_side(dimension: int, d: int, ell: float, spacing: float = 1.0, limit: int = 64) -> int:
    """
    最大方块边长 s，使 s 立方体的 ell 壳层站点数 < d

    Falls back to a single site when d > 1 and no cube shell is small enough.
    """
    best = 0
    for side in range(1, limit + 1):
        if _cube_shell_size(dimension, side, ell, spacing) < d:
            best = side
        else:
            break
    if best == 0 and d > 1:
        best = 1
    return best


def logical_support_grid(lat: Lattice, d: int, ell: float) -> PartitionPlan:
    """
    逻辑支撑网格：X 为彼此距离大于 ell 的不相交立方体，Y 为其补集

    Cells start at the origin with period side + gap where the gap keeps
    neighbouring cells more than ell apart; on periodic axes the last cell must
    also clear the first across the seam.
    """
    if lat.dimension < 2:
        raise InvalidArgumentError("logical_support_grid 需要 D ≥ 2")
    if ell <= 0:
        raise InvalidArgumentError("ell 必须为正")
    if d < 2:
        raise InvalidArgumentError(f"距离 d = {d} 下不存在可纠错的单点区域")
    side = logical_support_cell_side(lat.dimension, d, ell, lat.spacing)
    gap = int(math.floor(ell / lat.spacing + _EPS))
    period = side + gap
    starts_per_axis = []
    for length, periodic in zip(lat.extents, lat.periodic):
        starts = []
        i = 0
        while i * period + side <= length:
            if periodic and i > 0 and i * period + side + gap > length:
                break
            starts.append(i * period)
            i += 1
        if not starts:
            raise InvalidArgumentError(f"边长 {side} 的方块放不进 L = {length}")
        starts_per_axis.append(starts)
    regions: Dict[str, Region] = {}
    roles: Dict[str, str] = {}
    covered = set()
    for index, origin in enumerate(itertools.product(*starts_per_axis)):
        sites = tuple(itertools.product(*(range(o, o + side) for o in origin)))
        covered.update(sites)
        regions[f"X{index}"] = Region(lat, sites)
        roles[f"X{index}"] = "x_cell"
    regions["Y"] = Region(lat, tuple(s for s in lat.sites() if s not in covered))
    roles["Y"] = "y_rest"
    return PartitionPlan(
        lat,
        regions,
        roles,
        {"x_cell": float(ell)},
        {"cell_side": side, "gap": gap, "d": d, "ell": ell, "y_size": len(regions["Y"])},
    )
