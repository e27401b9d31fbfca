"""
量子信道模型
QuantumChannel: a Kraus list acting between positional tensor-factor orders.

Kraus operators are stored as one array of shape (r, d_out, d_in). input_qubits and
output_qubits name the qubits of the input and output factors in the order the
matrices use, which is not necessarily ascending (recovery maps emit (A, B)).
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.config import config
from models.errors import CapacityError, InvalidArgumentError


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Kraus 表示的量子信道"""
    kraus: np.ndarray
    input_qubits: Tuple[int, ...] = ()
    output_qubits: Tuple[int, ...] = ()
    name: str = ""
    diagnostics: List[str] = field(default_factory=list)

    def __post_init__(self):
        ops = np.asarray(self.kraus, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None, :, :]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise InvalidArgumentError(f"Kraus 数组形状 {ops.shape} 非法，应为 (r, d_out, d_in)")
        object.__setattr__(self, "kraus", ops)
        for attr, dim in (("input_qubits", ops.shape[2]), ("output_qubits", ops.shape[1])):
            qubits = tuple(int(q) for q in getattr(self, attr))
            if qubits and 2 ** len(qubits) != dim:
                raise InvalidArgumentError(f"{attr} = {qubits} 与维数 {dim} 不符")
            object.__setattr__(self, attr, qubits)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def num_kraus(self) -> int:
        return self.kraus.shape[0]

    def trace_residual(self) -> float:
        """max |Σ K†K - I|"""
        gram = np.einsum("kxa,kxb->ab", self.kraus.conj(), self.kraus)
        return float(np.max(np.abs(gram - np.eye(self.dim_in))))

    def is_trace_preserving(self, tolerance: float = 1e-9) -> bool:
        return self.trace_residual() <= tolerance

    def unital_residual(self) -> float:
        """伴随信道作用于单位算符的偏差；与迹保持等价"""
        return float(np.max(np.abs(self.apply_adjoint(np.eye(self.dim_out)) - np.eye(self.dim_in))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        if rho.shape != (self.dim_in, self.dim_in):
            raise InvalidArgumentError(f"输入形状 {rho.shape} 与信道输入维数 {self.dim_in} 不符")
        return np.einsum("kxa,ab,kyb->xy", self.kraus, rho, self.kraus.conj())

    def apply_adjoint(self, operator: np.ndarray) -> np.ndarray:
        """Heisenberg picture: Σ K† X K"""
        if operator.shape != (self.dim_out, self.dim_out):
            raise InvalidArgumentError(f"算符形状 {operator.shape} 与信道输出维数 {self.dim_out} 不符")
        return np.einsum("kxa,xy,kyb->ab", self.kraus.conj(), operator, self.kraus)

    @cached_property
    def stinespring(self) -> np.ndarray:
        """Isometry V with V[(x, k), b] = K_k[x, b]; output factor first, environment last."""
        return self.kraus.transpose(1, 0, 2).reshape(self.dim_out * self.num_kraus, self.dim_in)

    def complementary(self) -> "QuantumChannel":
        """互补信道：输出为环境（维数 = Kraus 个数）"""
        ops = self.kraus.transpose(1, 0, 2)
        return QuantumChannel(ops, self.input_qubits, (), f"{self.name}^c")

    def compose(self, first: "QuantumChannel") -> "QuantumChannel":
        """self ∘ first：先作用 first"""
        if first.dim_out != self.dim_in:
            raise InvalidArgumentError(f"维数不匹配: {first.dim_out} → {self.dim_in}")
        if first.output_qubits and self.input_qubits and first.output_qubits != self.input_qubits:
            raise InvalidArgumentError(f"量子比特顺序不匹配: {first.output_qubits} vs {self.input_qubits}")
        ops = np.einsum("ixy,jyz->ijxz", self.kraus, first.kraus)
        ops = ops.reshape(-1, self.dim_out, first.dim_in)
        keep = np.linalg.norm(ops.reshape(ops.shape[0], -1), axis=1) > 0
        if not np.any(keep):
            keep[0] = True
        return QuantumChannel(ops[keep], first.input_qubits, self.output_qubits,
                              f"{self.name}∘{first.name}", list(first.diagnostics) + list(self.diagnostics))

    def choi(self) -> np.ndarray:
        """Σ_ij |i><j| ⊗ N(|i><j|)，输入因子在前"""
        if self.dim_in * self.dim_out > 2 ** config.DENSE_QUBIT_LIMIT:
            raise CapacityError(f"Choi 矩阵维数 {self.dim_in * self.dim_out} 超出稠密上限")
        vec = self.kraus.transpose(0, 2, 1).reshape(self.num_kraus, -1)
        return vec.T @ vec.conj()

    def summary(self) -> dict:
        return {
            "name": self.name,
            "input_qubits": list(self.input_qubits),
            "output_qubits": list(self.output_qubits),
            "num_kraus": self.num_kraus,
            "trace_residual": self.trace_residual(),
            "diagnostics": list(self.diagnostics),
        }


def identity_channel(qubits: Sequence[int]) -> QuantumChannel:
    qubits = tuple(qubits)
    return QuantumChannel(np.eye(2 ** len(qubits), dtype=complex)[None], qubits, qubits, "identity")


def prepare_fixed_state(omega: np.ndarray, prepared_qubits: Sequence[int],
                        input_qubits: Sequence[int]) -> QuantumChannel:
    """
    σ ↦ ω ⊗ σ，输出因子顺序为 (prepared, input)

    Kraus operators are s_i ⊗ I with s_i the columns of sqrt(ω).
    """
    omega = np.asarray(omega, dtype=complex)
    prepared_qubits, input_qubits = tuple(prepared_qubits), tuple(input_qubits)
    if omega.shape != (2 ** len(prepared_qubits),) * 2:
        raise InvalidArgumentError(f"ω 形状 {omega.shape} 与 {len(prepared_qubits)} 个量子比特不符")
    w, v = np.linalg.eigh((omega + omega.conj().T) / 2)
    if w.min() < -config.PSD_TOLERANCE or abs(w.sum() - 1.0) > config.CHECK_SLACK:
        raise InvalidArgumentError("ω 不是密度矩阵")
    mask = w > config.SQRT_CLIP
    columns = v[:, mask] * np.sqrt(w[mask])
    din = 2 ** len(input_qubits)
    ops = np.stack([np.kron(col.reshape(-1, 1), np.eye(din)) for col in columns.T])
    return QuantumChannel(ops, input_qubits, prepared_qubits + input_qubits, "prepare")


def from_stinespring(isometry: np.ndarray, dim_out: int, input_qubits: Sequence[int] = (),
                     output_qubits: Sequence[int] = (), name: str = "") -> QuantumChannel:
    """由 Stinespring 等距矩阵（输出在前、环境在后）恢复 Kraus 表示"""
    rows, dim_in = isometry.shape
    if rows % dim_out:
        raise InvalidArgumentError(f"等距矩阵行数 {rows} 不是输出维数 {dim_out} 的倍数")
    ops = isometry.reshape(dim_out, rows // dim_out, dim_in).transpose(1, 0, 2)
    return QuantumChannel(ops, tuple(input_qubits), tuple(output_qubits), name)


def unitary_channel(unitary: np.ndarray, qubits: Sequence[int], name: str = "unitary") -> QuantumChannel:
    qubits = tuple(qubits)
    return QuantumChannel(np.asarray(unitary, dtype=complex)[None], qubits, qubits, name)


def depolarize_to_maximally_mixed(prepared_qubits: Sequence[int], input_qubits: Sequence[int]) -> QuantumChannel:
    """σ ↦ I/d ⊗ σ"""
    d = 2 ** len(tuple(prepared_qubits))
    return prepare_fixed_state(np.eye(d, dtype=complex) / d, prepared_qubits, input_qubits)


def permutation_matrix(order_from: Sequence[int], order_to: Sequence[int]) -> np.ndarray:
    """P with P |x in order_from> = |x in order_to>; both orders name the same qubits."""
    order_from, order_to = list(order_from), list(order_to)
    if sorted(order_from) != sorted(order_to):
        raise InvalidArgumentError(f"两种顺序的量子比特集合不同: {order_from} vs {order_to}")
    m = len(order_from)
    perm = [order_from.index(q) for q in order_to]
    eye = np.eye(2 ** m, dtype=complex).reshape((2,) * m + (2 ** m,))
    return eye.transpose(perm + [m]).reshape(2 ** m, 2 ** m)


def reorder_output(channel: QuantumChannel, order: Sequence[int]) -> QuantumChannel:
    """重排输出因子顺序"""
    p = permutation_matrix(channel.output_qubits, order)
    ops = np.einsum("xy,kyb->kxb", p, channel.kraus)
    return QuantumChannel(ops, channel.input_qubits, tuple(order), channel.name, list(channel.diagnostics))


def reorder_input(channel: QuantumChannel, order: Sequence[int]) -> QuantumChannel:
    """重排输入因子顺序"""
    p = permutation_matrix(order, channel.input_qubits)
    ops = np.einsum("kxa,ab->kxb", channel.kraus, p)
    return QuantumChannel(ops, tuple(order), channel.output_qubits, channel.name, list(channel.diagnostics))


def stack_kraus(channels: Sequence[QuantumChannel], name: Optional[str] = None) -> QuantumChannel:
    """把作用于相同输入/输出的若干 Kraus 组合并为一个信道"""
    first = channels[0]
    ops = np.concatenate([c.kraus for c in channels], axis=0)
    notes = [n for c in channels for n in c.diagnostics]
    return QuantumChannel(ops, first.input_qubits, first.output_qubits, name or first.name, notes)
