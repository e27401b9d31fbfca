"""
量子态模型
StateMatrix (density operator) and PureState (state vector), each carrying the
qubit labels of its tensor factors. Factors are ordered by ascending label, the
first label being the most significant bit of the basis index.
"""
import json
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.config import config
from models.errors import InvalidArgumentError

_MAGIC = b"AQSM"


def _check_labels(labels, count: int) -> Tuple[int, ...]:
    labels = tuple(int(x) for x in labels)
    if len(labels) != count:
        raise InvalidArgumentError(f"标签数 {len(labels)} 与量子比特数 {count} 不符")
    if list(labels) != sorted(set(labels)):
        raise InvalidArgumentError(f"标签必须严格递增: {labels}")
    return labels


def _qubit_count(dim: int) -> int:
    m = int(round(np.log2(dim))) if dim > 0 else -1
    if m < 0 or 2 ** m != dim:
        raise InvalidArgumentError(f"维数 {dim} 不是 2 的幂")
    return m


@dataclass(frozen=True, eq=False)
class StateMatrix:
    """密度矩阵（Hermitian，迹为 1，半正定）"""
    data: np.ndarray
    labels: Tuple[int, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidArgumentError(f"密度矩阵必须为方阵，收到形状 {data.shape}")
        m = _qubit_count(data.shape[0])
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", _check_labels(self.labels, m))
        if np.max(np.abs(data - data.conj().T), initial=0.0) > config.HERMITIAN_TOLERANCE:
            raise InvalidArgumentError("矩阵不是 Hermitian")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def validate(self, tolerance: float = None) -> "StateMatrix":
        """校验迹与半正定性，返回自身以便链式调用"""
        tolerance = config.PSD_TOLERANCE if tolerance is None else tolerance
        if abs(np.trace(self.data).real - 1.0) > max(tolerance, config.TRACE_TOLERANCE):
            raise InvalidArgumentError(f"迹为 {np.trace(self.data).real:.3e}，应为 1")
        if np.linalg.eigvalsh(self.data).min(initial=0.0) < -tolerance:
            raise InvalidArgumentError("矩阵不是半正定的")
        return self

    def to_bytes(self) -> bytes:
        header = struct.pack("<4sII", _MAGIC, self.num_qubits, self.dim)
        labels = struct.pack(f"<{self.num_qubits}q", *self.labels)
        body = np.ascontiguousarray(self.data, dtype="<c16").tobytes(order="C")
        return header + labels + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StateMatrix":
        magic, m, dim = struct.unpack_from("<4sII", blob, 0)
        if magic != _MAGIC or dim != 2 ** m:
            raise InvalidArgumentError("不是有效的 StateMatrix 二进制数据")
        offset = struct.calcsize("<4sII")
        labels = struct.unpack_from(f"<{m}q", blob, offset)
        offset += 8 * m
        data = np.frombuffer(blob, dtype="<c16", count=dim * dim, offset=offset).reshape(dim, dim)
        return cls(data.copy(), labels)

    def to_json(self) -> str:
        return json.dumps({
            "labels": list(self.labels),
            "real": self.data.real.tolist(),
            "imag": self.data.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "StateMatrix":
        payload = json.loads(text)
        data = np.asarray(payload["real"]) + 1j * np.asarray(payload["imag"])
        return cls(data, tuple(payload["labels"]))


@dataclass(frozen=True, eq=False)
class PureState:
    """纯态向量"""
    vector: np.ndarray
    labels: Tuple[int, ...]

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=complex).reshape(-1)
        m = _qubit_count(vec.size)
        object.__setattr__(self, "vector", vec)
        object.__setattr__(self, "labels", _check_labels(self.labels, m))
        if abs(np.linalg.norm(vec) - 1.0) > config.NORM_TOLERANCE * max(1, vec.size) ** 0.5:
            raise InvalidArgumentError(f"向量范数 {np.linalg.norm(vec):.12f} 不为 1")

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def density(self) -> StateMatrix:
        return StateMatrix(np.outer(self.vector, self.vector.conj()), self.labels)
