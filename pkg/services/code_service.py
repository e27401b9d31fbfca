"""
编码构造服务
Stabilizer code zoo, code-space construction, logical operator extraction,
distance computation and local perturbation circuits.
"""
import itertools
import json
import logging
import os
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from models.codes import CodeSpace, Gate, LocalCircuit, PauliOperator, StabilizerCode
from models.config import config
from models.errors import CapacityError, InvalidArgumentError
from models.lattice import Lattice, Region
from models.states import PureState, StateMatrix
from services.quantum_kernel import haar_vector
from utils import gf2

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# 码库
# ---------------------------------------------------------------------------

def toric_code(lx: int, ly: int) -> StabilizerCode:
    """
    环面码：量子比特位于周期格点的边上，n = 2 Lx Ly，k = 2

    Edges live on a doubled lattice with half spacing: vertex (x, y) sits at
    (2x, 2y), horizontal edge h(x, y) at (2x+1, 2y), vertical edge v(x, y) at
    (2x, 2y+1). One star and one plaquette are dropped to keep generators independent.
    """
    if lx < 2 or ly < 2:
        raise InvalidArgumentError("toric_code 需要 Lx, Ly ≥ 2")
    n = 2 * lx * ly

    def h(x, y):
        return (y % ly) * lx + (x % lx)

    def v(x, y):
        return lx * ly + (y % ly) * lx + (x % lx)

    rows = []
    for y in range(ly):
        for x in range(lx):
            if (x, y) == (lx - 1, ly - 1):
                continue
            star = np.zeros(2 * n, dtype=np.uint8)
            for q in (h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)):
                star[q] = 1
            rows.append(star)
    for y in range(ly):
        for x in range(lx):
            if (x, y) == (lx - 1, ly - 1):
                continue
            plaquette = np.zeros(2 * n, dtype=np.uint8)
            for q in (h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)):
                plaquette[n + q] = 1
            rows.append(plaquette)
    size = 2 * max(lx, ly)
    lattice = Lattice(2, size, (True, True), 0.5, (2 * lx, 2 * ly))
    sites = [None] * n
    for y in range(ly):
        for x in range(lx):
            sites[h(x, y)] = (2 * x + 1, 2 * y)
            sites[v(x, y)] = (2 * x, 2 * y + 1)
    return StabilizerCode(f"toric-{lx}x{ly}", np.array(rows), lattice, tuple(sites))


def five_qubit_code() -> StabilizerCode:
    """[[5,1,3]] 码：XZZXI 及其循环移位"""
    base = "XZZXI"
    rows = [PauliOperator.from_string(base[-i:] + base[:-i]).vector for i in range(4)]
    return StabilizerCode("five-qubit", np.array(rows), Lattice.open(1, 5), tuple((q,) for q in range(5)))


def repetition_code(n: int) -> StabilizerCode:
    """ZZ 链（相位翻转保护不足，量子距离为 1）"""
    if n < 2:
        raise InvalidArgumentError("repetition_code 需要 n ≥ 2")
    rows = []
    for q in range(n - 1):
        rows.append(PauliOperator.on_qubits(n, {q: "Z", q + 1: "Z"}).vector)
    return StabilizerCode(f"repetition-{n}", np.array(rows), Lattice.open(1, n), tuple((q,) for q in range(n)))


CODE_ZOO: Dict[str, Callable[[], StabilizerCode]] = {
    "toric-2x2": lambda: toric_code(2, 2),
    "toric-3x3": lambda: toric_code(3, 3),
    "five-qubit": five_qubit_code,
    "repetition-4": lambda: repetition_code(4),
}


def _parse_generator_line(line: str) -> np.ndarray:
    if "|" in line:
        xs, zs = (part.strip() for part in line.split("|"))
        if len(xs) != len(zs) or set(xs + zs) - {"0", "1"}:
            raise InvalidArgumentError(f"非法的辛二进制行: {line!r}")
        return np.array([int(c) for c in xs + zs], dtype=np.uint8)
    return PauliOperator.from_string(line).vector


def load_code_file(path: str) -> StabilizerCode:
    """
    从文本文件读取稳定子码

    One generator per line, either as a Pauli string ("XZZXI") or as binary
    halves ("10010|01100"); '#' starts a comment. Placement comes from the sidecar
    `<path>.sites.json` ({"lattice": {...}, "sites": [[...], ...]}) and defaults
    to an open chain.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for raw in handle:
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(_parse_generator_line(line))
    if not rows:
        raise InvalidArgumentError(f"{path} 中没有生成元")
    widths = {r.size for r in rows}
    if len(widths) != 1:
        raise InvalidArgumentError(f"{path} 中生成元长度不一致")
    n = rows[0].size // 2
    sidecar = path + ".sites.json"
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        lattice = Lattice.from_dict(payload["lattice"])
        sites = tuple(tuple(s) if isinstance(s, list) else (s,) for s in payload["sites"])
    else:
        lattice = Lattice.open(1, n)
        sites = tuple((q,) for q in range(n))
    name = os.path.splitext(os.path.basename(path))[0]
    return StabilizerCode(name, np.array(rows), lattice, sites)


def get_code(selector: str) -> StabilizerCode:
    """按码库名称或文件路径获取稳定子码"""
    if selector in CODE_ZOO:
        return CODE_ZOO[selector]()
    if os.path.exists(selector):
        return load_code_file(selector)
    raise InvalidArgumentError(f"未知的码: {selector!r}（可选: {', '.join(sorted(CODE_ZOO))}）")


# ---------------------------------------------------------------------------
# 逻辑算符与距离
# ---------------------------------------------------------------------------

def logical_operators(code: StabilizerCode) -> List[PauliOperator]:
    """
    辛 Gram-Schmidt 提取 2k 个逻辑 Pauli，顺序为 X1, Z1, X2, Z2, ...

    X_j anticommutes with Z_j only; every operator commutes with all generators
    and lies outside the stabilizer group.
    """
    gens = code.generators
    normalizer = gf2.nullspace(gf2.symplectic_swap(gens))
    chosen: List[np.ndarray] = []
    span = gens.copy()
    current = gf2.rank(span)
    for vec in normalizer:
        trial = np.vstack([span, vec])
        r = gf2.rank(trial)
        if r > current:
            span, current = trial, r
            chosen.append(vec.copy())
    pending = list(chosen)
    pairs = []
    while pending:
        a = pending.pop(0)
        partner = next((i for i, b in enumerate(pending) if gf2.symplectic_product(a, b)), None)
        if partner is None:
            raise InvalidArgumentError("逻辑算符提取失败：辛形式退化")
        b = pending.pop(partner)
        updated = []
        for c in pending:
            c = c.copy()
            if gf2.symplectic_product(c, b):
                c ^= a
            if gf2.symplectic_product(c, a):
                c ^= b
            updated.append(c)
        pending = updated
        pairs.append((a, b))
    out = []
    for j, (a, b) in enumerate(pairs, start=1):
        out.append(PauliOperator(a, 0, f"X{j}"))
        out.append(PauliOperator(b, 0, f"Z{j}"))
    return out


def logical_pairs(code: StabilizerCode) -> List[Tuple[PauliOperator, PauliOperator]]:
    ops = logical_operators(code)
    return [(ops[i], ops[i + 1]) for i in range(0, len(ops), 2)]


def _columns(qubits: Sequence[int], n: int) -> List[int]:
    return list(qubits) + [n + q for q in qubits]


def region_supports_logical(code: StabilizerCode, region) -> bool:
    """
    区域内是否存在非平凡逻辑 Pauli（GF(2) 秩比较）

    dim(normalizer ∩ P_A) = 2|A| - rank(generators' symplectic duals on A), and
    dim(stabilizer ∩ P_A) = m - rank(generators on the complement).
    """
    qubits = code.qubits_in(region)
    if not qubits:
        return False
    inside = _columns(qubits, code.n)
    swapped = gf2.symplectic_swap(code.generators)
    normalizer_dim = len(inside) - gf2.rank(swapped[:, inside])
    return normalizer_dim > stabilizer_subgroup_dimension(code, qubits)


def stabilizer_subgroup_dimension(code: StabilizerCode, region) -> int:
    """log2 |S_A|：完全支撑在区域内的稳定子个数"""
    qubits = code.qubits_in(region)
    inside = set(_columns(qubits, code.n))
    outside = [c for c in range(2 * code.n) if c not in inside]
    gens = code.generators
    return gens.shape[0] - (gf2.rank(gens[:, outside]) if outside else 0)


def _distance_guard(code: StabilizerCode, allow_large: bool):
    if code.n > config.DISTANCE_QUBIT_LIMIT and not allow_large:
        raise CapacityError(f"n = {code.n} 超出距离暴力计算上限，需要显式 allow_large=True")


def stabilizer_distance(code: StabilizerCode, allow_large: bool = False) -> int:
    """逻辑陪集最小权重，按区域大小递增扫描"""
    _distance_guard(code, allow_large)
    for w in range(1, code.n + 1):
        for qubits in itertools.combinations(range(code.n), w):
            if region_supports_logical(code, qubits):
                return w
    return code.n + 1


def distance_by_weight_enumeration(code: StabilizerCode, allow_large: bool = False) -> int:
    """独立交叉校验：逐个枚举 Pauli"""
    _distance_guard(code, allow_large)
    n = code.n
    gens = code.generators
    swapped = gf2.symplectic_swap(gens).astype(np.int64)
    letters = [(1, 0), (0, 1), (1, 1)]
    for w in range(1, n + 1):
        for qubits in itertools.combinations(range(n), w):
            for choice in itertools.product(letters, repeat=w):
                vec = np.zeros(2 * n, dtype=np.uint8)
                for q, (a, b) in zip(qubits, choice):
                    vec[q], vec[n + q] = a, b
                if np.any((swapped @ vec.astype(np.int64)) % 2):
                    continue
                if not gf2.in_span(gens, vec):
                    return w
    return n + 1


def clean_logical(code: StabilizerCode, logical: PauliOperator, region) -> Optional[PauliOperator]:
    """返回与 logical 相差一个稳定子、且在 region 上无支撑的等价算符；不存在时返回 None"""
    qubits = code.qubits_in(region)
    if not qubits:
        return logical
    n = code.n
    cols = _columns(qubits, n)
    target = logical.vector[cols]
    if not np.any(target):
        return logical
    combo = gf2.solve(code.generators[:, cols], target)
    if combo is None:
        return None
    stabilizer = (combo.astype(np.int64) @ code.generators.astype(np.int64)) % 2
    return PauliOperator(logical.vector ^ stabilizer.astype(np.uint8), 0, logical.name)


# ---------------------------------------------------------------------------
# 码空间
# ---------------------------------------------------------------------------

def encoding_isometry(code: StabilizerCode, seed: int = 0) -> np.ndarray:
    """
    编码等距矩阵 W（2^n x 2^k）

    A seeded random vector is projected onto the +1 eigenspace of every generator and
    every logical Z; the remaining columns follow from logical X strings.
    """
    if code.n > config.STATEVECTOR_QUBIT_LIMIT:
        raise CapacityError(f"n = {code.n} 超出态矢量上限 {config.STATEVECTOR_QUBIT_LIMIT}")
    pairs = logical_pairs(code)
    projectors = code.generator_paulis() + [z for _, z in pairs]
    dim = 2 ** code.n
    for attempt in range(8):
        vec = _gaussian_vector(dim, seed + attempt)
        for p in projectors:
            vec = (vec + p.apply(vec)) / 2
        norm = np.linalg.norm(vec)
        if norm > 1e-6:
            break
    else:
        raise InvalidArgumentError("无法构造编码态：码空间为空")
    vec = vec / norm
    columns = []
    for b in range(2 ** code.k):
        col = vec
        for j, (x_bar, _) in enumerate(pairs):
            if (b >> (code.k - 1 - j)) & 1:
                col = x_bar.apply(col)
        columns.append(col)
    return np.stack(columns, axis=1)


def _gaussian_vector(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def code_space(code: StabilizerCode) -> CodeSpace:
    """以等距矩阵表示的码空间（不受稠密上限约束）"""
    return CodeSpace(code, encoding_isometry(code), tuple(logical_operators(code)))


def projector_from_stabilizers(code: StabilizerCode) -> CodeSpace:
    """稠密投影算符 Π = ∏ (I + g)/2，要求 n ≤ 稠密上限"""
    if code.n > config.DENSE_QUBIT_LIMIT:
        raise CapacityError(
            f"n = {code.n} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}；请使用 region_supports_logical 等辛表示路径"
        )
    space = code_space(code)
    projector = np.eye(2 ** code.n, dtype=complex)
    for g in code.generator_paulis():
        projector = (projector + g.apply(projector)) / 2
    if np.max(np.abs(projector - space.projector)) > config.PROJECTOR_TOLERANCE:
        raise InvalidArgumentError("生成元乘积与编码等距矩阵不一致")
    space.__dict__["projector"] = projector
    return space


def perturb(space: CodeSpace, circuit: LocalCircuit) -> CodeSpace:
    """Π1 = U Π0 U†，等距矩阵变为 U W"""
    for gate in circuit.gates:
        if max(gate.qubits) >= space.n:
            raise InvalidArgumentError(f"门作用于量子比特 {gate.qubits}，超出 n = {space.n}")
    if circuit.is_identity:
        return space
    w = circuit.apply(space.isometry, space.n)
    return CodeSpace(space.code, w, space.logicals, space.circuit.then(circuit))


def code_purification(space: CodeSpace, logical_state: np.ndarray = None) -> np.ndarray:
    """
    (W ⊗ I_R)|v> 的态矢量，系统在前、R 在后

    logical_state is the 2^k x 2^k coefficient matrix V of |v>; the default is the
    maximally entangled V = I / sqrt(2^k).
    """
    dim_r = space.dim_r
    if logical_state is None:
        logical_state = np.eye(dim_r, dtype=complex) / np.sqrt(dim_r)
    return (space.isometry @ logical_state).reshape(-1)


def maximally_mixed_code_state(space: CodeSpace) -> Tuple[StateMatrix, PureState]:
    """ρ = Π / Tr Π 及其在 系统 ⊗ R 上的纯化"""
    rho = space.projector / space.dim_r
    labels = tuple(range(space.n))
    purification = PureState(code_purification(space), tuple(range(space.n + space.k)))
    return StateMatrix((rho + rho.conj().T) / 2, labels), purification


def random_code_state(space: CodeSpace, seed) -> PureState:
    """(W ⊗ I_R)|v>，|v> 在 2^k ⊗ 2^k 上 Haar 随机"""
    v = haar_vector(space.dim_r ** 2, seed).reshape(space.dim_r, space.dim_r)
    return PureState(code_purification(space, v), tuple(range(space.n + space.k)))


# ---------------------------------------------------------------------------
# 局域微扰线路
# ---------------------------------------------------------------------------

_TWO_QUBIT_TERMS = {
    "xx": np.kron(PauliOperator.from_string("X").to_matrix(), PauliOperator.from_string("X").to_matrix()),
    "zz": np.kron(PauliOperator.from_string("Z").to_matrix(), PauliOperator.from_string("Z").to_matrix()),
    "heisenberg": sum(
        np.kron(PauliOperator.from_string(p).to_matrix(), PauliOperator.from_string(p).to_matrix()) for p in "XYZ"
    ) / 3.0,
}


def _gate_hamiltonian(family: str, rng: np.random.Generator) -> np.ndarray:
    if family == "random":
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (g + g.conj().T) / 2
    elif family in _TWO_QUBIT_TERMS:
        h = _TWO_QUBIT_TERMS[family]
    else:
        raise InvalidArgumentError(f"未知的门族 {family!r}（可选: random, {', '.join(_TWO_QUBIT_TERMS)}）")
    return h / np.linalg.norm(h, 2)


def nearest_neighbor_pairs(code: StabilizerCode) -> List[Tuple[int, int]]:
    """按放置几何取最近邻量子比特对"""
    sites = code.qubit_sites
    dist = code.lattice.pairwise_distances(sites, sites)
    np.fill_diagonal(dist, np.inf)
    shortest = float(dist.min())
    return [(a, b) for a in range(code.n) for b in range(a + 1, code.n) if dist[a, b] <= shortest + 1e-9]


def _color_layers(pairs: List[Tuple[int, int]]) -> List[List[Tuple[int, int]]]:
    layers: List[List[Tuple[int, int]]] = []
    busy: List[set] = []
    for pair in pairs:
        for layer, used in zip(layers, busy):
            if pair[0] not in used and pair[1] not in used:
                layer.append(pair)
                used.update(pair)
                break
        else:
            layers.append([pair])
            busy.append(set(pair))
    return layers


def brickwork_circuit(code: StabilizerCode, epsilon: float, depth: int = 1, family: str = "xx",
                      seed: int = 0) -> LocalCircuit:
    """
    砖墙线路：每层为最近邻对上的 exp(-i eps h)，h 归一化为单位算符范数

    depth counts full sweeps over the colour classes of the nearest-neighbour graph.
    """
    if depth < 0:
        raise InvalidArgumentError("depth 必须非负")
    if epsilon == 0 or depth == 0:
        return LocalCircuit((), family, 0.0)
    rng = np.random.default_rng(seed)
    gates = []
    layers = _color_layers(nearest_neighbor_pairs(code))
    for sweep in range(depth):
        for index, layer in enumerate(layers):
            for pair in layer:
                h = _gate_hamiltonian(family, rng)
                gates.append(Gate(pair, expm(-1j * epsilon * h), epsilon, f"{family}[{sweep}.{index}]"))
    return LocalCircuit(tuple(gates), family, float(epsilon))


def single_qubit_rotation(qubit: int, epsilon: float, axis: str = "X") -> LocalCircuit:
    """exp(-i eps P)，P ∈ {X, Y, Z}"""
    pauli = PauliOperator.from_string(axis.upper()).to_matrix()
    return LocalCircuit((Gate((qubit,), expm(-1j * epsilon * pauli), epsilon, f"R{axis.upper()}"),), "rotation",
                        float(epsilon))
