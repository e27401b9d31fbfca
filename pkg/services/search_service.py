"""
最坏码态搜索服务
Worst-case code-state search over purified code states (W ⊗ I_R)|v>.

A code state is parametrised by the dim_R x dim_R coefficient matrix V of |v>,
flattened into 2 dim_R^2 real numbers. Each restart maximises the objective with
L-BFGS-B on finite-difference gradients; the result is the best value over a fixed
candidate list and all restarts, so a larger budget never lowers it.
"""
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from models.config import config
from models.errors import InvalidArgumentError
from utils.helpers import derive_seed

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class SearchBudget:
    """搜索预算：随机重启次数、单次迭代上限与收敛容差"""
    restarts: int = config.SEARCH_RESTARTS
    max_iterations: int = config.SEARCH_MAX_ITERATIONS
    tolerance: float = config.SEARCH_TOLERANCE
    seed: int = config.DEFAULT_SEED

    def __post_init__(self):
        if self.restarts < 0 or self.max_iterations < 1 or self.tolerance <= 0:
            raise InvalidArgumentError(f"非法的搜索预算: {self}")

    @classmethod
    def candidates_only(cls, seed: int = config.DEFAULT_SEED) -> "SearchBudget":
        return cls(restarts=0, seed=seed)

    def reseeded(self, *keys) -> "SearchBudget":
        """按任务键派生独立种子"""
        return SearchBudget(self.restarts, self.max_iterations, self.tolerance, derive_seed(self.seed, *keys))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchResult:
    value: float
    state: np.ndarray
    label: str
    evaluations: int = 0
    iterations: int = 0
    converged: bool = True
    history: List[float] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    @property
    def tau(self) -> np.ndarray:
        """逻辑侧约化密度矩阵 V V†"""
        return self.state @ self.state.conj().T

    def summary(self) -> dict:
        return {
            "value": float(self.value),
            "witness": self.label,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_values": [float(v) for v in self.history],
        }

    def witness_state(self) -> dict:
        return {"real": self.state.real.tolist(), "imag": self.state.imag.tolist()}


def _normalise(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        raise InvalidArgumentError("零向量不能作为码态")
    return v / norm


def pack(v: np.ndarray) -> np.ndarray:
    flat = v.reshape(-1)
    return np.concatenate([flat.real, flat.imag])


def unpack(x: np.ndarray, dim_r: int) -> np.ndarray:
    m = dim_r * dim_r
    return _normalise((x[:m] + 1j * x[m:]).reshape(dim_r, dim_r))


def standard_candidates(dim_r: int) -> List[Tuple[str, np.ndarray]]:
    """
    固定候选态

    The maximally entangled state, every logical basis state with R in |0>, and
    the uniform superposition |+...+> with R in |0>.
    """
    out = [("maximally_entangled", np.eye(dim_r, dtype=complex) / math.sqrt(dim_r))]
    for i in range(dim_r):
        v = np.zeros((dim_r, dim_r), dtype=complex)
        v[i, 0] = 1.0
        out.append((f"basis[{i}]", v))
    plus = np.zeros((dim_r, dim_r), dtype=complex)
    plus[:, 0] = 1.0 / math.sqrt(dim_r)
    out.append(("plus", plus))
    return out


def random_start(dim_r: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return _normalise(rng.standard_normal((dim_r, dim_r)) + 1j * rng.standard_normal((dim_r, dim_r)))


def evaluate_candidates(objective: Objective,
                        candidates: Sequence[Tuple[str, np.ndarray]]) -> List[Tuple[str, np.ndarray, float]]:
    scored = []
    for label, v in candidates:
        v = _normalise(np.asarray(v, dtype=complex))
        scored.append((label, v, float(objective(v))))
    return scored


def maximize_over_code_states(objective: Objective, dim_r: int, budget: SearchBudget = None,
                              extra_candidates: Sequence[Tuple[str, np.ndarray]] = ()) -> SearchResult:
    """
    最大化 objective(V)

    Args:
        objective: 码态系数矩阵 V（Frobenius 范数为 1）到实数的映射
        dim_r: 逻辑维数 2^k
        budget: 搜索预算；restarts = 0 时只评估候选态
        extra_candidates: 追加的 (标签, V) 候选，例如其他搜索的最坏态

    Returns:
        SearchResult，其值为所有候选与重启中的最大值
    """
    budget = budget or SearchBudget()
    counter = {"n": 0}

    def counted(v: np.ndarray) -> float:
        counter["n"] += 1
        return float(objective(v))

    scored = evaluate_candidates(counted, list(standard_candidates(dim_r)) + list(extra_candidates))
    best_label, best_state, best_value = max(scored, key=lambda item: item[2])
    history: List[float] = []
    diagnostics: List[str] = []
    iterations = 0
    converged = True

    def negative(x: np.ndarray) -> float:
        return -counted(unpack(x, dim_r))

    for restart in range(budget.restarts):
        if restart == 0:
            start = best_state
        else:
            start = random_start(dim_r, derive_seed(budget.seed, restart))
        result = minimize(
            negative,
            pack(start),
            method="L-BFGS-B",
            options={
                "maxiter": budget.max_iterations,
                "ftol": budget.tolerance,
                "eps": config.FINITE_DIFFERENCE_STEP,
            },
        )
        iterations += int(result.nit)
        value = -float(result.fun)
        history.append(value)
        if not result.success:
            converged = False
            note = f"重启 {restart} 未收敛: {result.message}"
            diagnostics.append(note)
            logger.debug(note)
        if value > best_value:
            best_value, best_state, best_label = value, unpack(result.x, dim_r), f"restart[{restart}]"
    logger.debug(f"搜索完成: 最大值 {best_value:.3e} ({best_label}), {counter['n']} 次评估")
    return SearchResult(best_value, best_state, best_label, counter["n"], iterations, converged, history,
                        diagnostics)
