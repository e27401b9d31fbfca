"""
编码模型
PauliOperator / StabilizerCode / Gate / LocalCircuit / CodeSpace

Qubit q corresponds to bit (n - 1 - q) of a computational basis index, i.e. qubit 0
is the most significant tensor factor. A PauliOperator with vector (x | z) and phase
p stands for i^p * prod_q i^{x_q z_q} X^{x_q} Z^{z_q}, so (1, 1) on a qubit is Y.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.config import config
from models.errors import CapacityError, InvalidArgumentError
from models.lattice import Lattice, Region, Site
from utils import gf2
from utils.helpers import content_hash

_SINGLE = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}
_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def _parity(values: np.ndarray) -> np.ndarray:
    p = values.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        p ^= p >> shift
    return p & 1


def _mask(bits: np.ndarray) -> int:
    n = bits.size
    return int(sum(1 << (n - 1 - q) for q in np.nonzero(bits)[0]))


@dataclass(frozen=True, eq=False)
class PauliOperator:
    """n 比特 Pauli 算符（辛二进制向量 + 相位指数 mod 4）"""
    vector: np.ndarray
    phase: int = 0
    name: str = ""

    def __post_init__(self):
        vec = gf2.as_bits(self.vector)[0]
        if vec.size % 2:
            raise InvalidArgumentError("辛向量长度必须为偶数")
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def from_string(cls, text: str, name: str = "") -> "PauliOperator":
        text = text.strip().upper()
        n = len(text)
        vec = np.zeros(2 * n, dtype=np.uint8)
        for q, letter in enumerate(text):
            if letter not in "IXYZ":
                raise InvalidArgumentError(f"非法 Pauli 字符 {letter!r}")
            vec[q] = letter in "XY"
            vec[n + q] = letter in "ZY"
        return cls(vec, 0, name)

    @classmethod
    def on_qubits(cls, n: int, letters: Dict[int, str], name: str = "") -> "PauliOperator":
        text = ["I"] * n
        for q, letter in letters.items():
            text[q] = letter
        return cls.from_string("".join(text), name)

    @property
    def n(self) -> int:
        return self.vector.size // 2

    @property
    def x(self) -> np.ndarray:
        return self.vector[: self.n]

    @property
    def z(self) -> np.ndarray:
        return self.vector[self.n:]

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(int(q) for q in np.nonzero(self.x | self.z)[0])

    @property
    def weight(self) -> int:
        return len(self.support)

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliOperator) and self.phase == other.phase and np.array_equal(self.vector, other.vector)

    def __hash__(self) -> int:
        return hash((self.phase, self.vector.tobytes()))

    def __str__(self) -> str:
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return prefix + "".join(_LETTERS[(int(a), int(b))] for a, b in zip(self.x, self.z))

    def commutes_with(self, other: "PauliOperator") -> bool:
        return gf2.symplectic_product(self.vector, other.vector) == 0

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        x1, z1 = self.x.astype(int), self.z.astype(int)
        x2, z2 = other.x.astype(int), other.z.astype(int)
        x3, z3 = (x1 ^ x2), (z1 ^ z2)
        phase = self.phase + other.phase + x1 @ z1 + x2 @ z2 + 2 * (z1 @ x2) - x3 @ z3
        return PauliOperator(np.concatenate([x3, z3]), int(phase) % 4)

    def to_matrix(self) -> np.ndarray:
        if self.n > config.DENSE_QUBIT_LIMIT:
            raise CapacityError(f"n = {self.n} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}")
        out = np.array([[1j ** self.phase]], dtype=complex)
        for a, b in zip(self.x, self.z):
            out = np.kron(out, _SINGLE[(int(a), int(b))])
        return out

    def apply(self, columns: np.ndarray) -> np.ndarray:
        """P @ columns for columns of shape (2^n,) or (2^n, c), without forming P."""
        n = self.n
        dim = 2 ** n
        if columns.shape[0] != dim:
            raise InvalidArgumentError(f"列维数 {columns.shape[0]} 与 2^{n} 不符")
        xmask, zmask = _mask(self.x), _mask(self.z)
        idx = np.arange(dim, dtype=np.int64) ^ xmask
        signs = 1 - 2 * _parity(idx & zmask)
        coeff = 1j ** ((self.phase + int(self.x.astype(int) @ self.z.astype(int))) % 4)
        source = columns[idx]
        if columns.ndim == 2:
            return coeff * signs[:, None] * source
        return coeff * signs * source


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """
    稳定子码

    generators is an (n - k) x 2n binary matrix with independent, pairwise
    commuting rows; qubit_sites places qubit q on a lattice site.
    """
    name: str
    generators: np.ndarray
    lattice: Lattice
    qubit_sites: Tuple[Site, ...]

    def __post_init__(self):
        gens = gf2.as_bits(self.generators)
        n = gens.shape[1] // 2
        sites = tuple(tuple(int(c) for c in s) for s in self.qubit_sites)
        if len(sites) != n:
            raise InvalidArgumentError(f"站点数 {len(sites)} 与 n = {n} 不符")
        if len(set(sites)) != n or not all(self.lattice.contains(s) for s in sites):
            raise InvalidArgumentError("量子比特站点必须互不相同且位于格点内")
        if np.any(gf2.symplectic_gram(gens, gens)):
            raise InvalidArgumentError("稳定子生成元不对易")
        if gf2.rank(gens) != gens.shape[0]:
            raise InvalidArgumentError("稳定子生成元线性相关")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "qubit_sites", sites)

    @property
    def n(self) -> int:
        return self.generators.shape[1] // 2

    @property
    def k(self) -> int:
        return self.n - self.generators.shape[0]

    @cached_property
    def site_to_qubit(self) -> Dict[Site, int]:
        return {s: q for q, s in enumerate(self.qubit_sites)}

    def generator_paulis(self) -> List[PauliOperator]:
        return [PauliOperator(row, 0, f"g{i}") for i, row in enumerate(self.generators)]

    def generator_region(self, index: int) -> Region:
        return self.region_of(PauliOperator(self.generators[index]).support)

    def generator_diameter(self) -> float:
        best = 0.0
        for i in range(self.generators.shape[0]):
            sites = self.generator_region(i).sites
            if len(sites) > 1:
                best = max(best, float(self.lattice.pairwise_distances(sites, sites).max()))
        return best

    def qubits_in(self, region) -> Tuple[int, ...]:
        """区域内的量子比特编号；也接受量子比特编号的可迭代对象"""
        if isinstance(region, Region):
            if region.lattice != self.lattice:
                raise InvalidArgumentError("区域来自不同的格点")
            lookup = self.site_to_qubit
            return tuple(sorted(lookup[s] for s in region.sites if s in lookup))
        qubits = tuple(sorted(set(int(q) for q in region)))
        if qubits and (qubits[0] < 0 or qubits[-1] >= self.n):
            raise InvalidArgumentError(f"量子比特编号越界: {qubits}")
        return qubits

    def region_of(self, qubits: Sequence[int]) -> Region:
        return Region(self.lattice, tuple(self.qubit_sites[q] for q in qubits))

    def fingerprint(self) -> str:
        return content_hash(self.generators.tolist(), self.lattice.to_dict(), [list(s) for s in self.qubit_sites])


@dataclass(frozen=True, eq=False)
class Gate:
    """作用于若干量子比特的幺正门"""
    qubits: Tuple[int, ...]
    unitary: np.ndarray
    strength: float = 0.0
    label: str = ""

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        u = np.asarray(self.unitary, dtype=complex)
        if u.shape != (2 ** len(qubits),) * 2:
            raise InvalidArgumentError(f"门矩阵形状 {u.shape} 与 {len(qubits)} 个量子比特不符")
        if len(set(qubits)) != len(qubits):
            raise InvalidArgumentError("门作用的量子比特重复")
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > config.UNITARY_TOLERANCE:
            raise InvalidArgumentError("门矩阵不是幺正的")
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "unitary", u)

    def apply(self, columns: np.ndarray, n: int) -> np.ndarray:
        """Apply to columns of shape (2^n,) or (2^n, c)."""
        flat = columns.ndim == 1
        cols = columns.reshape(-1, 1) if flat else columns
        c = cols.shape[1]
        m = len(self.qubits)
        tensor = cols.reshape((2,) * n + (c,))
        gate = self.unitary.reshape((2,) * (2 * m))
        moved = np.tensordot(gate, tensor, axes=(list(range(m, 2 * m)), list(self.qubits)))
        moved = np.moveaxis(moved, list(range(m)), list(self.qubits))
        out = moved.reshape(2 ** n, c)
        return out[:, 0] if flat else out

    def dagger(self) -> "Gate":
        return Gate(self.qubits, self.unitary.conj().T, self.strength, self.label + "†")


@dataclass(frozen=True, eq=False)
class LocalCircuit:
    """有序门列表；第一个门最先作用"""
    gates: Tuple[Gate, ...] = ()
    family: str = "identity"
    epsilon: float = 0.0

    @property
    def is_identity(self) -> bool:
        return not self.gates

    def apply(self, columns: np.ndarray, n: int) -> np.ndarray:
        out = columns
        for gate in self.gates:
            out = gate.apply(out, n)
        return out

    def apply_dagger(self, columns: np.ndarray, n: int) -> np.ndarray:
        out = columns
        for gate in reversed(self.gates):
            out = gate.dagger().apply(out, n)
        return out

    def unitary(self, n: int) -> np.ndarray:
        if n > config.DENSE_QUBIT_LIMIT:
            raise CapacityError(f"n = {n} 超出稠密上限")
        return self.apply(np.eye(2 ** n, dtype=complex), n)

    def then(self, other: "LocalCircuit") -> "LocalCircuit":
        return LocalCircuit(self.gates + other.gates, other.family if self.is_identity else self.family,
                            max(self.epsilon, other.epsilon))

    def support(self) -> Tuple[int, ...]:
        return tuple(sorted({q for g in self.gates for q in g.qubits}))

    def radius(self, code: StabilizerCode) -> float:
        """Largest gate diameter under the code's placement."""
        best = 0.0
        for gate in self.gates:
            sites = [code.qubit_sites[q] for q in gate.qubits]
            if len(sites) > 1:
                best = max(best, float(code.lattice.pairwise_distances(sites, sites).max()))
        return best


@dataclass(frozen=True, eq=False)
class CodeSpace:
    """
    码空间

    isometry W has orthonormal columns spanning the code space (2^n x 2^k). The
    optional circuit records the perturbation U already folded into W, so that
    dressed logicals are U L U^dagger.
    """
    code: StabilizerCode
    isometry: np.ndarray
    logicals: Tuple[PauliOperator, ...] = ()
    circuit: LocalCircuit = field(default_factory=LocalCircuit)

    def __post_init__(self):
        w = np.asarray(self.isometry, dtype=complex)
        if w.shape != (2 ** self.code.n, 2 ** self.code.k):
            raise InvalidArgumentError(f"等距矩阵形状 {w.shape} 与 (2^n, 2^k) 不符")
        gram = w.conj().T @ w
        if np.max(np.abs(gram - np.eye(gram.shape[0]))) > config.PROJECTOR_TOLERANCE:
            raise InvalidArgumentError("等距矩阵的列不正交归一")
        object.__setattr__(self, "isometry", w)

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def k(self) -> int:
        return self.code.k

    @property
    def dim_r(self) -> int:
        return 2 ** self.k

    @property
    def is_perturbed(self) -> bool:
        return not self.circuit.is_identity

    @cached_property
    def projector(self) -> np.ndarray:
        if self.n > config.DENSE_QUBIT_LIMIT:
            raise CapacityError(
                f"n = {self.n} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}，请改用辛表示或等距矩阵路径"
            )
        w = self.isometry
        return w @ w.conj().T

    def apply_logical(self, logical: PauliOperator, columns: np.ndarray) -> np.ndarray:
        """Dressed logical U L U^dagger acting on columns of the physical space."""
        if self.circuit.is_identity:
            return logical.apply(columns)
        inner = self.circuit.apply_dagger(columns, self.n)
        return self.circuit.apply(logical.apply(inner), self.n)

    def logical_matrix(self, logical: PauliOperator) -> np.ndarray:
        if self.n > config.DENSE_QUBIT_LIMIT:
            raise CapacityError(f"n = {self.n} 超出稠密上限")
        return self.apply_logical(logical, np.eye(2 ** self.n, dtype=complex))

    def fingerprint(self) -> str:
        gates = [(g.qubits, g.label, g.strength, np.round(g.unitary, 12).view(float).tolist())
                 for g in self.circuit.gates]
        return content_hash(self.code.fingerprint(), gates, self.circuit.family, self.circuit.epsilon)
