"""
可纠错性引擎
Correctability engine: Knill-Laflamme checks, the decoupling quantity μ,
transpose-channel recovery, certified δ_ℓ(A) intervals, the decoupling sandwich,
disentangling isometries and the mutual-information test.

Everything is evaluated on purified code states (W ⊗ I_R)|v>, where v is the
dim_R x dim_R coefficient matrix searched over by services.search_service.
RegionContext keeps the encoding isometry in (A, B, C) factor order so that each
reduced state an objective needs costs a single contraction.
"""
import itertools
import logging
import math
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.channels import QuantumChannel, permutation_matrix, reorder_input, reorder_output
from models.codes import CodeSpace, PauliOperator
from models.config import config
from models.errors import CapacityError, InvalidArgumentError, OutOfDomainError
from models.lattice import Region
from models.reports import CorrectabilityInterval, DisentanglingReport, MutualInformationReport, SandwichReport
from services.code_service import stabilizer_subgroup_dimension
from services.geometry_service import boundary_shell
from services.quantum_kernel import (
    bures_from_fidelity,
    entropy_matrix,
    inv_sqrtm_psd,
    mi_correctability_bound,
    sqrtm_psd,
)
from services.search_service import SearchBudget, SearchResult, maximize_over_code_states
from utils.helpers import operator_norm

logger = logging.getLogger(__name__)

RegionLike = Union[Region, Iterable[int]]


def resolve_region(space: CodeSpace, region: RegionLike) -> Tuple[Region, Tuple[int, ...]]:
    """区域或量子比特编号 → (Region, 升序量子比特元组)"""
    code = space.code
    if isinstance(region, Region):
        return region, code.qubits_in(region)
    qubits = code.qubits_in(region)
    return code.region_of(qubits), qubits


def _hermitian(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def _root_fidelity_from_overlap(overlap: np.ndarray) -> float:
    """Tr sqrt(X X†) given the PSD matrix X X†."""
    w = np.linalg.eigvalsh(_hermitian(overlap))
    return min(1.0, float(np.sum(np.sqrt(np.clip(w, 0.0, None)))))


class RegionContext:
    """
    (A, B, C) 划分上的约化态缓存

    A is the erased region, B its shield (the recovery input) and C the rest of
    the lattice. Qubits inside each part are kept in ascending order; every dense
    matrix produced here uses the factor order (A, B) or (A, R).
    """

    def __init__(self, space: CodeSpace, region_a: Sequence[int], region_b: Sequence[int] = ()):
        self.space = space
        self.a = tuple(sorted(int(q) for q in region_a))
        self.b = tuple(sorted(int(q) for q in region_b))
        overlap = set(self.a) & set(self.b)
        if overlap:
            raise InvalidArgumentError(f"A 与 B 相交: {sorted(overlap)}")
        n = space.n
        taken = set(self.a) | set(self.b)
        self.c = tuple(q for q in range(n) if q not in taken)
        self.dim_a = 2 ** len(self.a)
        self.dim_b = 2 ** len(self.b)
        self.dim_c = 2 ** len(self.c)
        self.dim_r = space.dim_r
        order = list(self.a) + list(self.b) + list(self.c)
        tensor = space.isometry.reshape((2,) * n + (self.dim_r,)).transpose(order + [n])
        self.tensor = tensor.reshape(self.dim_a * self.dim_b, self.dim_c, self.dim_r)

    @property
    def dim_ab(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def maximally_mixed_tau(self) -> np.ndarray:
        return np.eye(self.dim_r, dtype=complex) / self.dim_r

    def _require_dense_ab(self):
        if len(self.a) + len(self.b) > config.DENSE_QUBIT_LIMIT:
            raise CapacityError(
                f"|A| + |B| = {len(self.a) + len(self.b)} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}"
            )

    def _require_dense_ar(self):
        if self.dim_a * self.dim_r > 2 ** config.DENSE_QUBIT_LIMIT:
            raise CapacityError(f"ρ^AR 维数 {self.dim_a * self.dim_r} 超出稠密上限")

    # -- ρ^{AB} ------------------------------------------------------------

    @cached_property
    def _gram(self) -> Optional[np.ndarray]:
        """E[i, j] = Tr_C G_i G_j†，ρ^{AB}(τ) 对 τ 线性"""
        if self.dim_r ** 2 * self.dim_ab ** 2 > config.GRAM_ENTRY_LIMIT:
            return None
        g = self.tensor
        return np.einsum("pci,qcj->ijpq", g, g.conj(), optimize=True)

    def rho_ab_tau(self, tau: np.ndarray) -> np.ndarray:
        self._require_dense_ab()
        gram = self._gram
        if gram is None:
            rho = np.einsum("pci,ij,qcj->pq", self.tensor, tau, self.tensor.conj(), optimize=True)
        else:
            rho = np.tensordot(tau, gram, axes=([0, 1], [0, 1]))
        return _hermitian(rho)

    def rho_ab(self, v: np.ndarray) -> np.ndarray:
        return self.rho_ab_tau(v @ v.conj().T)

    def trace_out_b(self, rho_ab: np.ndarray) -> np.ndarray:
        r4 = rho_ab.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)
        return np.einsum("abcb->ac", r4)

    def trace_out_a(self, rho_ab: np.ndarray) -> np.ndarray:
        r4 = rho_ab.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)
        return np.einsum("abad->bd", r4)

    # -- ρ^{AR} ------------------------------------------------------------

    @cached_property
    def _gram_a(self) -> np.ndarray:
        self._require_dense_ar()
        g = self.tensor.reshape(self.dim_a, self.dim_b * self.dim_c, self.dim_r)
        return np.einsum("axi,bxj->ijab", g, g.conj(), optimize=True)

    def rho_a_tau(self, tau: np.ndarray) -> np.ndarray:
        return _hermitian(np.einsum("ij,ijab->ab", tau, self._gram_a))

    def rho_ar(self, v: np.ndarray) -> np.ndarray:
        rho = np.einsum("ir,jq,ijab->arbq", v, v.conj(), self._gram_a, optimize=True)
        size = self.dim_a * self.dim_r
        return _hermitian(rho.reshape(size, size))

    @staticmethod
    def rho_r(v: np.ndarray) -> np.ndarray:
        return _hermitian(v.T @ v.conj())

    @cached_property
    def reference_omega(self) -> np.ndarray:
        """ω^A = Tr_{BC} Π / Tr Π"""
        return self.rho_a_tau(self.maximally_mixed_tau)

    # -- 目标函数 -----------------------------------------------------------

    def decoupling_fidelity(self, rho_ab: np.ndarray, omega: np.ndarray) -> float:
        """
        F(ρ^{ACR}, ω^A ⊗ ρ^{CR}) from ρ^{AB} alone

        With both states purified through B, the fidelity is the trace norm of
        the purifier overlap X; X X† = Σ ρ[pq,ab] ω[a,c] conj(ρ[pq,cd]).
        """
        r4 = rho_ab.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)
        overlap = np.einsum("pqab,pqcd,ac->bd", r4, r4.conj(), omega, optimize=True)
        return _root_fidelity_from_overlap(overlap)

    def mu(self, v: np.ndarray) -> float:
        """𝔅(ρ^{ACR}, ρ^A ⊗ ρ^{CR})"""
        rho = self.rho_ab(v)
        return bures_from_fidelity(self.decoupling_fidelity(rho, self.trace_out_b(rho)))

    def fixed_mu(self, v: np.ndarray) -> float:
        """𝔅(ρ^{ACR}, ω^A ⊗ ρ^{CR})，ω^A 取码空间最大混态的约化"""
        return bures_from_fidelity(self.decoupling_fidelity(self.rho_ab(v), self.reference_omega))

    def recovery_overlaps(self, kraus: np.ndarray, rho_ab: np.ndarray) -> np.ndarray:
        """t[k, a] = <ψ| K_k |ψ_a>，其中 |ψ_a> = <a|_A |ψ>"""
        r3 = rho_ab.reshape(self.dim_a, self.dim_b, self.dim_ab)
        return np.einsum("kxb,abx->ka", kraus, r3, optimize=True)

    def recovery_fidelity(self, kraus: np.ndarray, v: np.ndarray) -> float:
        t = self.recovery_overlaps(kraus, self.rho_ab(v))
        return min(1.0, math.sqrt(float(np.sum(np.abs(t) ** 2))))

    def recovery_error(self, kraus: np.ndarray, v: np.ndarray) -> float:
        return bures_from_fidelity(self.recovery_fidelity(kraus, v))

    def mutual_information_ar(self, v: np.ndarray) -> float:
        """I(A:R) = S(A) + S(R) - S(AR)"""
        rho = self.rho_ar(v)
        r4 = rho.reshape(self.dim_a, self.dim_r, self.dim_a, self.dim_r)
        s_a = entropy_matrix(np.einsum("arbr->ab", r4))
        s_r = entropy_matrix(self.rho_r(v))
        return max(0.0, s_a + s_r - entropy_matrix(rho))

    def mutual_information_acr(self, v: np.ndarray) -> float:
        """I(A:CR) = S(A) + S(AB) - S(B)（整体为纯态）"""
        rho = self.rho_ab(v)
        value = entropy_matrix(self.trace_out_b(rho)) + entropy_matrix(rho) - entropy_matrix(self.trace_out_a(rho))
        return max(0.0, value)

    # -- 转置信道 -----------------------------------------------------------

    def transpose_channel(self) -> QuantumChannel:
        """
        以 σ = Π/TrΠ 为参考态的转置（Petz）信道 B → AB

        K_a = σ_AB^{1/2} (|a>_A ⊗ σ_B^{-1/2}); inputs in the kernel of σ_B are sent
        to |0>_A with B untouched so that the channel stays trace preserving.
        """
        sigma = self.rho_ab_tau(self.maximally_mixed_tau)
        inv_b, kernel, kdim = inv_sqrtm_psd(self.trace_out_a(sigma))
        root = sqrtm_psd(sigma).reshape(self.dim_ab, self.dim_a, self.dim_b)
        kraus = np.einsum("xab,bc->axc", root, inv_b, optimize=True)
        diagnostics: List[str] = []
        if kdim:
            fill = np.zeros((self.dim_ab, self.dim_b), dtype=complex)
            fill[: self.dim_b, :] = kernel
            kraus = np.concatenate([kraus, fill[None]], axis=0)
            note = f"σ_B 奇异（核维数 {kdim}/{self.dim_b}），核上以 |0>_A 补全"
            diagnostics.append(note)
            logger.warning(f"⚠️ {note}")
        channel = QuantumChannel(kraus, self.b, self.a + self.b, "petz", diagnostics)
        residual = channel.trace_residual()
        if residual > config.CHECK_SLACK:
            note = f"转置信道迹保持残差 {residual:.2e}"
            channel.diagnostics.append(note)
            logger.warning(f"⚠️ {note}")
        return channel


class StabilizerTransposeRecovery:
    """
    未微扰稳定子码上的转置信道误差，只需被擦除区域上的约化态

    Every reduced σ_X of σ = Π/TrΠ is |S_X| 2^{-|X|} P_X, so on code states the
    transpose channel Y → XY reaches fidelity² = c Tr ρ_X² with
    c = |S_XY| / (|S_Y| 2^{|X|}). If a fixed ω is first prepared on part P of
    the input, the fidelity² becomes c Tr[ρ_XP (ω ⊗ I_X) ρ_XP].
    """

    def __init__(self, space: CodeSpace, erased: Sequence[int], inputs: Sequence[int]):
        if space.is_perturbed:
            raise InvalidArgumentError("稳定子形式只适用于未微扰的码空间")
        self.space = space
        self.erased = tuple(sorted(int(q) for q in erased))
        self.inputs = tuple(sorted(int(q) for q in inputs))
        if not self.erased or set(self.erased) & set(self.inputs):
            raise InvalidArgumentError(f"被擦除区域 {self.erased} 必须非空且与输入 {self.inputs} 不相交")
        code = space.code
        joint = stabilizer_subgroup_dimension(code, self.erased + self.inputs)
        self.log2_scale = joint - stabilizer_subgroup_dimension(code, self.inputs) - len(self.erased)
        self._contexts = {}

    def _context(self, qubits: Tuple[int, ...]) -> RegionContext:
        if qubits not in self._contexts:
            self._contexts[qubits] = RegionContext(self.space, qubits)
        return self._contexts[qubits]

    def _fidelity(self, overlap: float) -> float:
        return min(1.0, math.sqrt(max(0.0, 2.0 ** self.log2_scale * overlap)))

    def recovery_error(self, v: np.ndarray) -> float:
        rho = self._context(self.erased).rho_a_tau(v @ v.conj().T)
        return bures_from_fidelity(self._fidelity(float(np.real(np.trace(rho @ rho)))))

    def prepared_error(self, v: np.ndarray, prepared: Sequence[int], omega: np.ndarray) -> float:
        """先在 prepared ⊆ 输入上制备 ω 再恢复，被擦除的是 erased ∪ prepared"""
        prepared = tuple(sorted(int(q) for q in prepared))
        if not set(prepared) <= set(self.inputs):
            raise InvalidArgumentError(f"制备区域 {prepared} 不在输入 {self.inputs} 内")
        region = tuple(sorted(prepared + self.erased))
        swap = permutation_matrix(prepared + self.erased, region)
        weight = swap @ np.kron(omega, np.eye(2 ** len(self.erased))) @ swap.conj().T
        rho = self._context(region).rho_a_tau(v @ v.conj().T)
        return bures_from_fidelity(self._fidelity(float(np.real(np.trace(rho @ weight @ rho)))))


# ---------------------------------------------------------------------------
# 精确判据
# ---------------------------------------------------------------------------

def knill_laflamme_check(space: CodeSpace, region: RegionLike) -> Tuple[bool, float]:
    """
    Knill-Laflamme / TQO 判据：对 A 上每个 Pauli O 检查 W† O W ∝ I

    Returns:
        (是否通过, 最大算符范数残差)
    """
    _, qubits = resolve_region(space, region)
    if len(qubits) > config.KL_REGION_LIMIT:
        raise CapacityError(f"|A| = {len(qubits)} 超出 Knill-Laflamme 枚举上限 {config.KL_REGION_LIMIT}")
    if not qubits:
        return True, 0.0
    w = space.isometry
    eye = np.eye(space.dim_r)
    worst = 0.0
    for letters in itertools.product("IXYZ", repeat=len(qubits)):
        if set(letters) == {"I"}:
            continue
        pauli = PauliOperator.on_qubits(space.n, dict(zip(qubits, letters)))
        block = w.conj().T @ pauli.apply(w)
        c = np.trace(block) / space.dim_r
        worst = max(worst, operator_norm(block - c * eye))
    return worst < config.EXACT_THRESHOLD, worst


# ---------------------------------------------------------------------------
# 退耦与恢复
# ---------------------------------------------------------------------------

def search_decoupling_mu(space: CodeSpace, region_a: RegionLike, region_c: RegionLike,
                         budget: SearchBudget = None, extra_candidates=()) -> SearchResult:
    """μ = sup 𝔅(ρ^{ACR}, ρ^A ⊗ ρ^{CR})，B 为 A、C 之外的全部量子比特"""
    budget = budget or SearchBudget()
    _, a = resolve_region(space, region_a)
    _, c = resolve_region(space, region_c)
    if set(a) & set(c):
        raise InvalidArgumentError("A 与 C 必须不相交")
    b = tuple(q for q in range(space.n) if q not in set(a) | set(c))
    if not a:
        budget = SearchBudget.candidates_only(budget.seed)
    ctx = RegionContext(space, a, b)
    return maximize_over_code_states(ctx.mu, space.dim_r, budget, extra_candidates)


def decoupling_mu(space: CodeSpace, region_a: RegionLike, region_c: RegionLike,
                  budget: SearchBudget = None) -> float:
    return search_decoupling_mu(space, region_a, region_c, budget).value


def petz_recovery(space: CodeSpace, region_a: RegionLike, region_b: RegionLike) -> QuantumChannel:
    """擦除 A 后从 B 恢复 AB 的转置信道；输出因子顺序为 (A, B)"""
    _, a = resolve_region(space, region_a)
    _, b = resolve_region(space, region_b)
    return RegionContext(space, a, b).transpose_channel()


def _aligned_recovery(channel: QuantumChannel, space: CodeSpace,
                      region_a: RegionLike) -> Tuple[RegionContext, np.ndarray]:
    _, a = resolve_region(space, region_a)
    if channel.dim_in > 1 and not channel.input_qubits:
        raise InvalidArgumentError("恢复信道缺少输入量子比特标签")
    if channel.dim_out > 1 and not channel.output_qubits:
        raise InvalidArgumentError("恢复信道缺少输出量子比特标签")
    b = tuple(sorted(channel.input_qubits))
    if set(a) & set(b):
        raise InvalidArgumentError(f"恢复信道的输入 {b} 与被擦除区域 {a} 相交")
    if set(channel.output_qubits) != set(a) | set(b):
        raise InvalidArgumentError(
            f"恢复信道输出 {sorted(channel.output_qubits)} 应为 A ∪ 输入 = {sorted(set(a) | set(b))}"
        )
    aligned = reorder_output(reorder_input(channel, b), a + b)
    return RegionContext(space, a, b), aligned.kraus


def search_recovery_error(channel: QuantumChannel, space: CodeSpace, region_a: RegionLike,
                          budget: SearchBudget = None, extra_candidates=()) -> SearchResult:
    """sup 𝔅(R(ρ^{BCR}), ρ^{ABCR})，B 为信道输入"""
    budget = budget or SearchBudget()
    ctx, kraus = _aligned_recovery(channel, space, region_a)
    return maximize_over_code_states(lambda v: ctx.recovery_error(kraus, v), space.dim_r, budget,
                                     extra_candidates)


def recovery_error(channel: QuantumChannel, space: CodeSpace, region_a: RegionLike,
                   budget: SearchBudget = None) -> float:
    return search_recovery_error(channel, space, region_a, budget).value


# ---------------------------------------------------------------------------
# δ_ℓ(A) 区间
# ---------------------------------------------------------------------------

def witness_array(interval: CorrectabilityInterval) -> Optional[np.ndarray]:
    state = interval.witness_state
    if not state:
        return None
    return np.asarray(state["real"]) + 1j * np.asarray(state["imag"])


def shield_context(space: CodeSpace, region: RegionLike, ell: float) -> Tuple[RegionContext, Region]:
    region, a = resolve_region(space, region)
    shield = boundary_shell(region, ell)
    return RegionContext(space, a, space.code.qubits_in(shield)), shield


def delta_ell_interval(space: CodeSpace, region: RegionLike, ell: float,
                       budget: SearchBudget = None) -> CorrectabilityInterval:
    """
    δ_ℓ(A) 的认证区间

    The upper end is the searched worst-case error of the transpose channel built
    on B = A^{+ℓ} \\ A; the lower end is μ/2 with μ the searched decoupling
    quantity for C = complement of A^{+ℓ}. μ is re-evaluated at the recovery
    witness, so the two searches share their best states.
    """
    budget = budget or SearchBudget()
    ctx, _ = shield_context(space, region, ell)
    key = (space.fingerprint(), list(ctx.a), float(ell))
    if not ctx.a:
        budget = SearchBudget.candidates_only(budget.seed)

    mu_search = maximize_over_code_states(ctx.mu, space.dim_r, budget.reseeded("mu", *key))
    recovery = ctx.transpose_channel()
    kraus = recovery.kraus
    rec_search = maximize_over_code_states(
        lambda v: ctx.recovery_error(kraus, v), space.dim_r, budget.reseeded("recovery", *key),
        extra_candidates=[("mu_witness", mu_search.state)],
    )
    mu = max(mu_search.value, ctx.mu(rec_search.state))
    lower = min(1.0, mu / 2)
    upper = min(1.0, rec_search.value)

    diagnostics = list(recovery.diagnostics) + mu_search.diagnostics + rec_search.diagnostics
    if lower > upper + config.CHECK_SLACK:
        note = f"区间倒置: δ_lower = {lower:.3e} > δ_upper = {upper:.3e}"
        diagnostics.append(note)
        logger.warning(f"⚠️ {note}")
    logger.debug(f"δ_ℓ 区间 A={ctx.a} ℓ={ell}: [{lower:.3e}, {upper:.3e}]")
    return CorrectabilityInterval(
        code=space.code.name,
        region=list(ctx.a),
        shield=list(ctx.b),
        ell=float(ell),
        delta_lower=lower,
        delta_upper=upper,
        mu=min(1.0, mu),
        witness_state=rec_search.witness_state(),
        search={"mu": mu_search.summary(), "recovery": rec_search.summary(), "budget": budget.to_dict()},
        recovery=recovery,
        diagnostics=diagnostics,
    )


def verify_decoupling_sandwich(space: CodeSpace, region: RegionLike, ell: float, budget: SearchBudget = None,
                               interval: CorrectabilityInterval = None) -> SandwichReport:
    """(1/9) δ_lower² ≤ μ ≤ 2 δ_upper"""
    interval = interval or delta_ell_interval(space, region, ell, budget)
    tol = config.SANDWICH_TOLERANCE
    lower_margin = interval.mu - interval.delta_lower ** 2 / 9.0
    upper_margin = 2.0 * interval.delta_upper - interval.mu
    passed = lower_margin >= -tol and upper_margin >= -tol
    if not passed:
        logger.warning(f"❌ 退耦夹逼不等式失败: A={interval.region} μ={interval.mu:.3e} "
                       f"δ∈[{interval.delta_lower:.3e}, {interval.delta_upper:.3e}]")
    return SandwichReport(
        code=interval.code,
        region=interval.region,
        ell=float(ell),
        mu=interval.mu,
        delta_lower=interval.delta_lower,
        delta_upper=interval.delta_upper,
        lower_margin=lower_margin,
        upper_margin=upper_margin,
        passed=passed,
        diagnostics=list(interval.diagnostics),
    )


# ---------------------------------------------------------------------------
# 解纠缠
# ---------------------------------------------------------------------------

def unitary_extension(matrix: np.ndarray) -> np.ndarray:
    """
    收缩矩阵的幺正扩张

    For M of shape p x q with ||M|| <= 1 returns the (p + q) x (p + q) unitary
    [[M, -sqrt(I - M M†)], [sqrt(I - M† M), M†]]. The defect roots share M's
    singular vectors, which keeps the blocks intertwined exactly.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2:
        raise InvalidArgumentError("需要二维矩阵")
    p, q = m.shape
    left, s, right_h = np.linalg.svd(m, full_matrices=True)
    if s.size and s[0] > 1.0 + 1e-10:
        raise InvalidArgumentError(f"||M|| = {s[0]:.12f} > 1，不是收缩")
    defect = np.sqrt(np.clip(1.0 - s ** 2, 0.0, None))
    c_left = np.ones(p)
    c_left[: s.size] = defect
    c_right = np.ones(q)
    c_right[: s.size] = defect
    d_left = (left * c_left) @ left.conj().T
    right = right_h.conj().T
    d_right = (right * c_right) @ right_h
    return np.block([[m, -d_left], [d_right, m.conj().T]])


def disentangling_check(space: CodeSpace, region: RegionLike, ell: float, budget: SearchBudget = None,
                        interval: CorrectabilityInterval = None) -> DisentanglingReport:
    """
    转置信道 Stinespring 等距的解纠缠检验

    Applying the isometry to B leaves |ψ> on the recovered ABCR and the state
    ξ[k, a] = <ψ| K_k |ψ_a> on the environment and the erased copy of A, so the
    deviation from product form with an optimal environment is sqrt(1 - ||ξ||).
    The fixed-environment deviation compares against ξ at the maximally
    entangled code state instead.
    """
    budget = budget or SearchBudget()
    interval = interval or delta_ell_interval(space, region, ell, budget)
    ctx = RegionContext(space, interval.region, interval.shield)
    recovery = interval.recovery if interval.recovery is not None else ctx.transpose_channel()
    kraus = recovery.kraus
    diagnostics: List[str] = []

    def environment(v: np.ndarray) -> np.ndarray:
        return ctx.recovery_overlaps(kraus, ctx.rho_ab(v)).reshape(-1)

    reference = environment(np.eye(space.dim_r, dtype=complex) / math.sqrt(space.dim_r))
    reference = reference / max(np.linalg.norm(reference), 1e-300)

    def optimal_deviation(v: np.ndarray) -> float:
        return bures_from_fidelity(min(1.0, float(np.linalg.norm(environment(v)))))

    def fixed_deviation(v: np.ndarray) -> float:
        return bures_from_fidelity(min(1.0, abs(np.vdot(reference, environment(v)))))

    extra = []
    witness = witness_array(interval)
    if witness is not None:
        extra.append(("interval_witness", witness))
    key = (space.fingerprint(), interval.region, float(ell))
    fixed_search = maximize_over_code_states(fixed_deviation, space.dim_r,
                                             budget.reseeded("disentangle", *key), extra)
    probes = [fixed_search.state] + ([witness] if witness is not None else [])
    deviation = max(optimal_deviation(v) for v in probes)
    delta_upper = max(interval.delta_upper, ctx.recovery_error(kraus, fixed_search.state))

    isometry = recovery.stinespring
    isometry_residual = recovery.trace_residual()
    extension_residual = None
    if sum(isometry.shape) <= config.UNITARY_EXTENSION_DIM_LIMIT:
        try:
            u = unitary_extension(isometry)
            extension_residual = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        except InvalidArgumentError as e:
            diagnostics.append(f"幺正扩张跳过: {e}")

    product_form = fixed_search.value < config.EXACT_THRESHOLD
    passed = deviation <= delta_upper + config.SANDWICH_TOLERANCE and (product_form or not interval.exact)
    if not passed:
        logger.warning(f"❌ 解纠缠检验失败: A={interval.region} 偏差 {deviation:.3e}, δ_upper {delta_upper:.3e}")
    return DisentanglingReport(
        code=interval.code,
        region=interval.region,
        ell=float(ell),
        deviation=deviation,
        fixed_environment_deviation=fixed_search.value,
        delta_upper=delta_upper,
        isometry_residual=isometry_residual,
        unitary_extension_residual=extension_residual,
        product_form=product_form,
        passed=passed,
        diagnostics=diagnostics + fixed_search.diagnostics,
    )


# ---------------------------------------------------------------------------
# 互信息
# ---------------------------------------------------------------------------

def mutual_information_ar(space: CodeSpace, region: RegionLike, budget: SearchBudget = None,
                          extra_candidates=()) -> SearchResult:
    """sup I(A:R)，A 之外的全部量子比特均被求迹"""
    budget = budget or SearchBudget()
    _, a = resolve_region(space, region)
    if not a:
        budget = SearchBudget.candidates_only(budget.seed)
    ctx = RegionContext(space, a)
    return maximize_over_code_states(ctx.mutual_information_ar, space.dim_r,
                                     budget.reseeded("mutual_information", space.fingerprint(), list(a)),
                                     extra_candidates)


def mi_correctability_check(space: CodeSpace, region: RegionLike, ell: float, budget: SearchBudget = None,
                            interval: CorrectabilityInterval = None) -> MutualInformationReport:
    """
    I(A:R) ≤ 18√2 δ log(2^k / (2√2 δ))

    Exactly correctable regions must show I(A:R) = 0. The bound is only asserted
    while 2√2 δ stays in the increasing range of t log(2^k / t).
    """
    budget = budget or SearchBudget()
    interval = interval or delta_ell_interval(space, region, ell, budget)
    witness = witness_array(interval)
    extra = [("interval_witness", witness)] if witness is not None else []
    info = mutual_information_ar(space, interval.region, budget, extra).value
    delta = interval.delta_upper
    bound: Optional[float] = None
    if interval.exact:
        status = "exact"
        bound = 0.0
        passed = info < config.EXACT_THRESHOLD
    elif delta > 2 ** space.k / (2 * math.sqrt(2) * math.e):
        status, passed = "inconclusive", True
    else:
        try:
            bound = mi_correctability_bound(space.k, delta)
        except OutOfDomainError:
            status, passed = "inconclusive", True
        else:
            passed = info <= bound + config.SANDWICH_TOLERANCE
            status = "bounded" if passed else "violated"
    if not passed:
        logger.warning(f"❌ 互信息检验失败: A={interval.region} I={info:.3e} 上界 {bound}")
    return MutualInformationReport(
        code=interval.code,
        region=interval.region,
        ell=float(ell),
        mutual_information=info,
        delta_upper=delta,
        bound=bound,
        status=status,
        passed=passed,
    )
