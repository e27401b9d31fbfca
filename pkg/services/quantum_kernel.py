"""
量子计算内核
Quantum kernel: partial traces, Uhlmann fidelity, Bures and trace distances,
entropies, mutual information and the continuity bounds built on them.

All public functions accept StateMatrix / PureState values; the underscore-free
*_matrix helpers work on raw numpy arrays and are what the engines call in
their inner loops.
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from models.config import config
from models.errors import InvalidArgumentError, OutOfDomainError
from models.states import PureState, StateMatrix

logger = logging.getLogger(__name__)

State = Union[StateMatrix, PureState]


# ---------------------------------------------------------------------------
# 数组级工具
# ---------------------------------------------------------------------------

def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below the clip are treated as zero."""
    herm = (matrix + matrix.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    w = np.where(w < config.SQRT_CLIP, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def inv_sqrtm_psd(matrix: np.ndarray, tolerance: float = None) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    伪逆平方根

    Returns:
        (M^{-1/2} on the support, projector onto the kernel, kernel dimension)
    """
    tolerance = config.PSEUDO_INVERSE_TOLERANCE if tolerance is None else tolerance
    herm = (matrix + matrix.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    support = w > tolerance * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    inv = np.zeros_like(w)
    inv[support] = 1.0 / np.sqrt(w[support])
    kernel = v[:, ~support]
    return (v * inv) @ v.conj().T, kernel @ kernel.conj().T, int(np.count_nonzero(~support))


def partial_trace_matrix(data: np.ndarray, num_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """
    按给定顺序保留量子比特位置（0 为最高位）

    The result's factor order follows `keep`, not the original order.
    """
    keep = list(keep)
    traced = [q for q in range(num_qubits) if q not in set(keep)]
    tensor = data.reshape((2,) * (2 * num_qubits))
    order = keep + traced + [num_qubits + q for q in keep] + [num_qubits + q for q in traced]
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    tensor = tensor.transpose(order).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", tensor)


def reduced_from_vector(vector: np.ndarray, num_qubits: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of a pure state on positions `keep`, in that order."""
    keep = list(keep)
    traced = [q for q in range(num_qubits) if q not in set(keep)]
    mat = vector.reshape((2,) * num_qubits).transpose(keep + traced).reshape(2 ** len(keep), -1)
    return mat @ mat.conj().T


def fidelity_matrix(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr sqrt(sqrt(sigma) rho sqrt(sigma)), clipped to [0, 1]."""
    s = sqrtm_psd(sigma)
    inner = s @ rho @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    value = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return min(1.0, max(0.0, value))


def bures_from_fidelity(value: float) -> float:
    return math.sqrt(max(0.0, 1.0 - value))


def trace_norm(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(matrix, compute_uv=False)))


def trace_distance_matrix(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = rho - sigma
    w = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return min(1.0, 0.5 * float(np.sum(np.abs(w))))


def entropy_matrix(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > config.ENTROPY_CUTOFF]
    return max(0.0, float(-np.sum(w * np.log(w))))


# ---------------------------------------------------------------------------
# 公共接口
# ---------------------------------------------------------------------------

def _density(state: State) -> np.ndarray:
    if isinstance(state, PureState):
        return np.outer(state.vector, state.vector.conj())
    if isinstance(state, StateMatrix):
        return state.data
    raise InvalidArgumentError(f"不支持的态类型: {type(state).__name__}")


def _require_psd(state: State):
    if isinstance(state, StateMatrix):
        if np.linalg.eigvalsh(state.data).min() < -config.PSD_TOLERANCE:
            raise InvalidArgumentError("输入不是半正定矩阵")


def _require_same_labels(rho: State, sigma: State):
    if tuple(rho.labels) != tuple(sigma.labels):
        raise InvalidArgumentError(f"标签不一致: {rho.labels} vs {sigma.labels}")


def _positions(labels: Sequence[int], keep: Iterable[int]) -> list:
    index = {label: i for i, label in enumerate(labels)}
    try:
        return [index[int(label)] for label in sorted(set(keep))]
    except KeyError as exc:
        raise InvalidArgumentError(f"标签 {exc.args[0]} 不在态的标签 {tuple(labels)} 中") from None


def partial_trace(state: State, keep: Iterable[int]) -> StateMatrix:
    """保留 keep 中的标签，对其余取迹；结果按标签升序排列"""
    keep = sorted(set(int(k) for k in keep))
    positions = _positions(state.labels, keep)
    if isinstance(state, PureState):
        data = reduced_from_vector(state.vector, state.num_qubits, positions)
    else:
        data = partial_trace_matrix(state.data, state.num_qubits, positions)
    return StateMatrix((data + data.conj().T) / 2, tuple(keep))


def fidelity(rho: State, sigma: State) -> float:
    """Uhlmann 保真度（未平方），纯态时等于 |<psi|phi>|"""
    _require_same_labels(rho, sigma)
    _require_psd(rho)
    _require_psd(sigma)
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return min(1.0, float(abs(np.vdot(rho.vector, sigma.vector))))
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        pure, mixed = (rho, sigma) if isinstance(rho, PureState) else (sigma, rho)
        overlap = np.vdot(pure.vector, mixed.data @ pure.vector).real
        return min(1.0, math.sqrt(max(0.0, overlap)))
    return fidelity_matrix(rho.data, sigma.data)


def bures_distance(rho: State, sigma: State) -> float:
    return bures_from_fidelity(fidelity(rho, sigma))


def trace_distance(rho: State, sigma: State) -> float:
    _require_same_labels(rho, sigma)
    _require_psd(rho)
    _require_psd(sigma)
    return trace_distance_matrix(_density(rho), _density(sigma))


@dataclass(frozen=True)
class FuchsVanDeGraafReport:
    """Fuchs-van de Graaf 关系的四个裕量（均应 ≥ -slack）"""
    fidelity: float
    trace_distance: float
    bures: float
    squares_margin: float  # 1 - (F^2 + T^2)
    sum_margin: float  # F + T - 1
    lower_norm_margin: float  # ||rho - sigma||_1 - 2 B^2
    upper_norm_margin: float  # 2 sqrt(2) B - ||rho - sigma||_1
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_fuchs_van_de_graaf(rho: State, sigma: State, slack: float = None) -> FuchsVanDeGraafReport:
    slack = config.CHECK_SLACK if slack is None else slack
    f = fidelity(rho, sigma)
    t = trace_distance(rho, sigma)
    b = bures_from_fidelity(f)
    norm = 2 * t
    margins = (
        1.0 - (f * f + t * t),
        f + t - 1.0,
        norm - 2 * b * b,
        2 * math.sqrt(2) * b - norm,
    )
    passed = all(m >= -slack for m in margins)
    if not passed:
        logger.warning(f"⚠️ Fuchs-van de Graaf 裕量越界: {margins}")
    return FuchsVanDeGraafReport(f, t, b, *margins, passed)


def entropy(state: State) -> float:
    """von Neumann 熵（自然对数）"""
    if isinstance(state, PureState):
        return 0.0
    _require_psd(state)
    return entropy_matrix(state.data)


def mutual_information(state: State, part_a: Iterable[int], part_b: Iterable[int]) -> float:
    """I(A:B) = S(A) + S(B) - S(AB)"""
    a = set(int(x) for x in part_a)
    b = set(int(x) for x in part_b)
    if a & b:
        raise InvalidArgumentError(f"两部分重叠: {sorted(a & b)}")
    s_a = entropy(partial_trace(state, a)) if a else 0.0
    s_b = entropy(partial_trace(state, b)) if b else 0.0
    s_ab = entropy(partial_trace(state, a | b)) if a | b else 0.0
    return max(0.0, s_a + s_b - s_ab)


def mi_continuity_bound(t: float, d_a: int) -> float:
    """互信息连续性界 9 t log(d_A / t)，要求 0 ≤ t < 1/2"""
    if d_a < 2:
        raise InvalidArgumentError("d_A 必须 ≥ 2")
    if t < 0 or t >= 0.5:
        raise OutOfDomainError(f"t = {t} 不在 [0, 1/2) 内")
    if t == 0:
        return 0.0
    return 9.0 * t * math.log(d_a / t)


def mi_correctability_bound(k: int, delta: float) -> float:
    """可纠错区域互信息上界 18 sqrt(2) delta log(2^k / (2 sqrt(2) delta))"""
    if k < 1:
        raise InvalidArgumentError("k 必须为正整数")
    if delta <= 0 or delta > 1 / math.e:
        raise OutOfDomainError(f"delta = {delta} 不在 (0, 1/e] 内")
    return 18.0 * math.sqrt(2) * delta * math.log(2 ** k / (2 * math.sqrt(2) * delta))


# ---------------------------------------------------------------------------
# 随机态（可复现）
# ---------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(None if seed is None else int(seed) % (2 ** 64))


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """QR of a complex Gaussian matrix with the phase of R's diagonal removed."""
    rng = _rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def haar_vector(dim: int, seed=None) -> np.ndarray:
    """Normalised complex Gaussian vector (Haar-distributed on the unit sphere)."""
    rng = _rng(seed)
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def random_pure_state(num_qubits: int, seed=None, labels: Sequence[int] = None) -> PureState:
    labels = tuple(range(num_qubits)) if labels is None else tuple(labels)
    return PureState(haar_vector(2 ** num_qubits, seed), labels)


def random_density_matrix(num_qubits: int, seed=None, rank: int = None, labels: Sequence[int] = None) -> StateMatrix:
    """Ginibre 随机密度矩阵"""
    rng = _rng(seed)
    dim = 2 ** num_qubits
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    labels = tuple(range(num_qubits)) if labels is None else tuple(labels)
    return StateMatrix((rho + rho.conj().T) / 2, labels)
