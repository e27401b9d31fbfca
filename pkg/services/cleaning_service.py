"""
清理与引理服务
Logical-operator pull-backs, cleaning verification in both directions, the
expansion and union lemma certificates and the transfer of correctability
through a local circuit.

Checks are dense (n ≤ DENSE_QUBIT_LIMIT) except the expansion lemma, which
falls back to the stabilizer form on larger unperturbed codes. Failed
inequalities are reported through pass flags rather than exceptions.
"""
import itertools
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.channels import (
    QuantumChannel,
    permutation_matrix,
    prepare_fixed_state,
    reorder_output,
)
from models.codes import CodeSpace, Gate, LocalCircuit, PauliOperator
from models.config import config
from models.errors import CapacityError, InvalidArgumentError
from models.lattice import Region
from models.reports import (
    CleaningReport,
    ConverseCleaningReport,
    CorrectabilityInterval,
    LemmaReport,
    PerturbationTransferReport,
)
from services.code_service import clean_logical, logical_operators, perturb
from services.correctability_service import (
    RegionContext,
    RegionLike,
    StabilizerTransposeRecovery,
    delta_ell_interval,
    petz_recovery,
    resolve_region,
    search_recovery_error,
    witness_array,
)
from services.geometry_service import boundary_shell, neighborhood
from services.quantum_kernel import bures_from_fidelity, fidelity_matrix, trace_norm
from services.search_service import SearchBudget, maximize_over_code_states
from utils.helpers import operator_norm

logger = logging.getLogger(__name__)


def _require_dense(n: int):
    if n > config.DENSE_QUBIT_LIMIT:
        raise CapacityError(f"n = {n} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}")


def _to_natural_order(matrix: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """把按 order 排列因子的算符换回 0..n-1 的自然顺序"""
    n = len(order)
    inverse = list(np.argsort(order))
    tensor = matrix.reshape((2,) * (2 * n))
    return tensor.transpose(inverse + [n + i for i in inverse]).reshape(2 ** n, 2 ** n)


def _from_natural_order(matrix: np.ndarray, order: Sequence[int]) -> np.ndarray:
    n = len(order)
    order = list(order)
    tensor = matrix.reshape((2,) * (2 * n))
    return tensor.transpose(order + [n + q for q in order]).reshape(2 ** n, 2 ** n)


def acts_trivially_on(matrix: np.ndarray, qubits: Sequence[int], tolerance: float = 1e-9) -> bool:
    """算符是否形如 I_A ⊗ X"""
    n = int(round(math.log2(matrix.shape[0])))
    qubits = sorted(qubits)
    if not qubits:
        return True
    others = [q for q in range(n) if q not in set(qubits)]
    d_a = 2 ** len(qubits)
    permuted = _from_natural_order(matrix, qubits + others)
    m4 = permuted.reshape(d_a, 2 ** len(others), d_a, 2 ** len(others))
    reduced = np.einsum("axay->xy", m4) / d_a
    return float(np.max(np.abs(permuted - np.kron(np.eye(d_a), reduced)))) <= tolerance


# ---------------------------------------------------------------------------
# 拉回与清理
# ---------------------------------------------------------------------------

def pull_back_logical(channel: QuantumChannel, operator: np.ndarray) -> np.ndarray:
    """
    V = R*(U)：恢复信道的伴随作用于 U

    The channel reads its input qubits and writes input ∪ erased; U acts on all n
    qubits, and the returned V acts trivially on the erased ones.
    """
    operator = np.asarray(operator, dtype=complex)
    dim = operator.shape[0]
    n = int(round(math.log2(dim)))
    if operator.shape != (2 ** n, 2 ** n):
        raise InvalidArgumentError(f"算符形状 {operator.shape} 不是 2^n x 2^n")
    _require_dense(n)
    residual = channel.unital_residual()
    if residual > config.CHECK_SLACK:
        raise InvalidArgumentError(f"伴随信道不保单位（残差 {residual:.2e}），拉回无定义")
    inputs = tuple(channel.input_qubits)
    if not set(inputs) <= set(channel.output_qubits):
        raise InvalidArgumentError("信道输入必须包含在输出之中")
    if any(q >= n for q in channel.output_qubits):
        raise InvalidArgumentError(f"信道作用于 {channel.output_qubits}，超出 n = {n}")
    erased = tuple(sorted(set(channel.output_qubits) - set(inputs)))
    aligned = reorder_output(channel, erased + inputs)
    rest = tuple(q for q in range(n) if q not in set(channel.output_qubits))
    d_e, d_i, d_r = 2 ** len(erased), 2 ** len(inputs), 2 ** len(rest)
    order = list(erased) + list(inputs) + list(rest)
    u4 = _from_natural_order(operator, order).reshape(d_e * d_i, d_r, d_e * d_i, d_r)
    v = np.einsum("kxb,xcyd,kye->bced", aligned.kraus.conj(), u4, aligned.kraus, optimize=True)
    full = np.kron(np.eye(d_e), v.reshape(d_i * d_r, d_i * d_r))
    return _to_natural_order(full, order)


def verify_cleaning(space: CodeSpace, region: RegionLike, ell: float, logicals: Sequence[PauliOperator] = None,
                    budget: SearchBudget = None, interval: CorrectabilityInterval = None) -> List[CleaningReport]:
    """
    可纠错区域上的逻辑算符清理

    For each logical unitary U the pull-back V through the region's recovery must
    satisfy ||(U - V)Π|| ≤ 4√δ and ||Π(U - V)|| ≤ 4√δ, with δ the certified upper
    end. The code-space sandwich ||Π(U - V)Π|| is bounded by 2 ε_1 ||U|| where
    ε_1 = 2√2 δ is the trace-norm error the Bures bound implies.
    """
    _require_dense(space.n)
    interval = interval or delta_ell_interval(space, region, ell, budget)
    recovery = interval.recovery or petz_recovery(space, interval.region, interval.shield)
    delta = interval.delta_upper
    projector = space.projector
    trace_error = min(2.0, 2.0 * math.sqrt(2.0) * delta)
    reports = []
    for logical in (logicals if logicals is not None else space.logicals):
        u = space.logical_matrix(logical)
        v = pull_back_logical(recovery, u)
        diff = u - v
        right = operator_norm(diff @ projector)
        left = operator_norm(projector @ diff)
        sandwich = operator_norm(projector @ diff @ projector)
        u_norm = operator_norm(u)
        rhs = 4.0 * math.sqrt(delta)
        sandwich_rhs = 2.0 * trace_error * u_norm
        report = CleaningReport(
            code=interval.code,
            region=interval.region,
            logical=logical.name or str(logical),
            delta=delta,
            right_norm=right,
            left_norm=left,
            sandwich_norm=sandwich,
            rhs=rhs,
            sandwich_rhs=sandwich_rhs,
            pull_back_norm=operator_norm(v),
            logical_norm=u_norm,
            support_ok=acts_trivially_on(v, interval.region),
            right_passed=right <= rhs + config.CHECK_SLACK,
            left_passed=left <= rhs + config.CHECK_SLACK,
            sandwich_passed=sandwich <= sandwich_rhs + config.CHECK_SLACK,
        )
        if not report.passed:
            logger.warning(f"❌ 清理检验失败: A={interval.region} {report.logical} "
                           f"||(U-V)Π||={right:.3e} 上界 {rhs:.3e}")
        reports.append(report)
    return reports


def logical_pauli_group(space: CodeSpace) -> List[PauliOperator]:
    """由 X_j, Z_j 生成的 4^k 个逻辑 Pauli（相位不计）"""
    ops = list(space.logicals)
    if len(ops) != 2 * space.k:
        raise InvalidArgumentError(f"需要 2k = {2 * space.k} 个逻辑算符，收到 {len(ops)}")
    pairs = [(ops[i], ops[i + 1]) for i in range(0, len(ops), 2)]
    identity = PauliOperator(np.zeros(2 * space.n, dtype=np.uint8), 0, "I")
    group = []
    for choice in itertools.product("IXYZ", repeat=space.k):
        op = identity
        for (x_bar, z_bar), letter in zip(pairs, choice):
            if letter in "XY":
                op = op * x_bar
            if letter in "ZY":
                op = op * z_bar
        name = "".join(f"{letter}{j + 1}" for j, letter in enumerate(choice) if letter != "I") or "I"
        group.append(PauliOperator(op.vector, op.phase, name))
    return group


def _clip_contraction(matrix: np.ndarray) -> np.ndarray:
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    return (u * np.minimum(s, 1.0)) @ vh


def _least_squares_cleaning(w_blocks: np.ndarray, t_blocks: np.ndarray) -> np.ndarray:
    """
    min Σ_a ||T_a - Y W_a||_F² subject to ||Y|| ≤ 1

    Starts from the clipped unconstrained minimiser and runs projected gradient
    steps of size 1 / (2 ||Σ W_a W_a†||).
    """
    gram = np.einsum("axr,ayr->xy", w_blocks, w_blocks.conj())
    cross = np.einsum("axr,ayr->xy", t_blocks, w_blocks.conj())

    def cost(y: np.ndarray) -> float:
        return float(np.sum(np.abs(t_blocks - np.einsum("xy,ayr->axr", y, w_blocks)) ** 2))

    y = _clip_contraction(cross @ np.linalg.pinv(gram, hermitian=True))
    value = cost(y)
    step = 1.0 / (2.0 * max(operator_norm(gram), 1e-300))
    for _ in range(config.CLEANING_MAX_ITERATIONS):
        candidate = _clip_contraction(y + 2.0 * step * (cross - y @ gram))
        new_value = cost(candidate)
        if value - new_value <= 1e-12 * max(1.0, value):
            break
        y, value = candidate, new_value
    return y


def converse_cleaning(space: CodeSpace, region: RegionLike, logical_basis: Sequence[PauliOperator] = None,
                      budget: SearchBudget = None) -> ConverseCleaningReport:
    """
    可清理区域 ⇒ 可纠错

    With B the complement of A, every logical U is approximated by an operator V
    on B (pull-back through the transpose channel, or a constrained least-squares
    fit when that is not exact); ε is the worst of ||(U - V)Π|| and ||(U† - V†)Π||.
    The searched sup of ||ρ^{AR} - ω^A ⊗ ρ^R||_1 with ω^A = Tr_B Π / Tr Π must stay
    below 5ε, and the logical Pauli twirl must reproduce I/dim Π ⊗ ρ^R.
    """
    budget = budget or SearchBudget()
    _require_dense(space.n)
    _, a = resolve_region(space, region)
    b = tuple(q for q in range(space.n) if q not in set(a))
    ctx = RegionContext(space, a, b)
    omega = ctx.reference_omega
    logicals = list(logical_basis) if logical_basis is not None else logical_pauli_group(space)
    projector = space.projector
    recovery = ctx.transpose_channel()
    recovery_is_exact = bool(a) and search_recovery_error(
        recovery, space, a, SearchBudget.candidates_only(budget.seed)).value <= config.EXACT_THRESHOLD

    w = space.isometry
    d_a, d_b = ctx.dim_a, ctx.dim_b
    order = list(a) + list(b)

    def blocks(columns: np.ndarray) -> np.ndarray:
        tensor = columns.reshape((2,) * space.n + (space.dim_r,)).transpose(order + [space.n])
        return tensor.reshape(d_a, d_b, space.dim_r)

    w_blocks = blocks(w)
    per_logical, methods = {}, {}
    epsilon = 0.0
    for logical in logicals:
        name = logical.name or str(logical)
        u = space.logical_matrix(logical)

        def cleaning_error(v: np.ndarray) -> float:
            diff = u - v
            return max(operator_norm(diff @ projector), operator_norm(diff.conj().T @ projector))

        v = pull_back_logical(recovery, u)
        best, method = cleaning_error(v), "pull_back"
        if best > config.EXACT_THRESHOLD and a:
            y = _least_squares_cleaning(w_blocks, blocks(u @ w))
            fitted = _to_natural_order(np.kron(np.eye(d_a), y), order)
            fitted_error = cleaning_error(fitted)
            if fitted_error < best:
                best, method = fitted_error, "least_squares"
        per_logical[name] = best
        methods[name] = method
        epsilon = max(epsilon, best)

    if not a:
        sup_value, witness = 0.0, np.eye(space.dim_r, dtype=complex) / math.sqrt(space.dim_r)
    else:
        def deviation(v: np.ndarray) -> float:
            return trace_norm(ctx.rho_ar(v) - np.kron(omega, ctx.rho_r(v)))

        search = maximize_over_code_states(deviation, space.dim_r,
                                           budget.reseeded("converse", space.fingerprint(), list(a)))
        sup_value, witness = search.value, search.state

    group = logicals if logical_basis is None else logical_pauli_group(space)
    twirl = _twirl_residual(space, group, [witness, np.eye(space.dim_r) / math.sqrt(space.dim_r)])
    bound = 5.0 * epsilon
    passed = sup_value <= bound + config.SANDWICH_TOLERANCE and twirl <= config.CHECK_SLACK
    diagnostics = list(recovery.diagnostics)
    if recovery_is_exact:
        diagnostics.append("转置信道在候选态上精确恢复")
    if not passed:
        logger.warning(f"❌ 逆向清理检验失败: A={list(a)} sup||·||_1={sup_value:.3e} 5ε={bound:.3e}")
    return ConverseCleaningReport(
        code=space.code.name,
        region=list(a),
        epsilon=epsilon,
        per_logical=per_logical,
        methods=methods,
        trace_norm_sup=sup_value,
        bound=bound,
        implied_correctability=math.sqrt(5.0 * epsilon / 2.0),
        twirl_residual=twirl,
        passed=passed,
        diagnostics=diagnostics,
    )


def _twirl_residual(space: CodeSpace, logicals: Sequence[PauliOperator], probes) -> float:
    """逻辑 Pauli 群平均 (1/|G|) Σ L ρ L† 与 I/dim Π ⊗ ρ^R 的最大偏差"""
    w = space.isometry
    dim_r = space.dim_r
    blocks = [w.conj().T @ space.apply_logical(logical, w) for logical in logicals]
    worst = 0.0
    for v in probes:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        average = np.zeros((dim_r * dim_r, dim_r * dim_r), dtype=complex)
        for m in blocks:
            vec = (m @ v).reshape(-1)
            average += np.outer(vec, vec.conj())
        average /= len(blocks)
        target = np.kron(np.eye(dim_r) / dim_r, v.T @ v.conj())
        worst = max(worst, float(np.max(np.abs(average - target))))
    return worst


# ---------------------------------------------------------------------------
# 扩张引理与合并引理
# ---------------------------------------------------------------------------

def _lemma_interval(space: CodeSpace, region: Sequence[int], shield: Sequence[int], ell: Optional[float],
                    lower: float, upper: float, witness: np.ndarray, recovery=None,
                    diagnostics: List[str] = None) -> CorrectabilityInterval:
    diagnostics = list(diagnostics or [])
    if lower > upper + config.CHECK_SLACK:
        note = f"区间倒置: δ_lower = {lower:.3e} > δ_upper = {upper:.3e}"
        diagnostics.append(note)
        logger.warning(f"⚠️ {note}")
    return CorrectabilityInterval(
        code=space.code.name,
        region=sorted(region),
        shield=sorted(shield),
        ell=ell,
        delta_lower=min(1.0, lower),
        delta_upper=min(1.0, upper),
        mu=min(1.0, 2.0 * lower),
        witness_state={"real": witness.real.tolist(), "imag": witness.imag.tolist()},
        recovery=recovery,
        diagnostics=diagnostics,
    )


def _reference_decoupling(ctx: RegionContext):
    """v ↦ 𝔅(ρ^{AR}, ρ^A ⊗ ρ^R)"""
    def objective(v: np.ndarray) -> float:
        rho = ctx.rho_ar(v)
        r4 = rho.reshape(ctx.dim_a, ctx.dim_r, ctx.dim_a, ctx.dim_r)
        return bures_from_fidelity(fidelity_matrix(rho, np.kron(np.einsum("arbr->ab", r4), ctx.rho_r(v))))
    return objective


def _lower_bound_subregion(space: CodeSpace, region: Sequence[int]) -> Tuple[int, ...]:
    """
    δ 下界所用的子区域 X ⊆ region

    Tracing out the shield and the rest only lowers 𝔅, so any X gives a valid
    lower bound; the whole region is used when ρ^{XR} is small enough, otherwise
    the smallest logical support found inside it.
    """
    room = config.SUBREGION_QUBIT_LIMIT - int(round(math.log2(space.dim_r)))
    region = tuple(sorted(region))
    if len(region) <= room:
        return region
    outside = [q for q in range(space.n) if q not in set(region)]
    supports = []
    for logical in logical_operators(space.code):
        cleaned = clean_logical(space.code, logical, outside)
        if cleaned is not None:
            supports.append(tuple(sorted(cleaned.support)))
    supports = sorted((s for s in supports if 0 < len(s) <= room), key=len)
    return supports[0] if supports else region[:max(room, 0)]


def expansion_lemma_apply(space: CodeSpace, region: RegionLike, ell: float, budget: SearchBudget = None,
                          shell: RegionLike = None) -> LemmaReport:
    """
    扩张引理：A 与 B = A^{+ℓ} \\ A 均可纠错 ⇒ AB 可纠错，误差可加

    With C = A^{+2ℓ} \\ AB, the composite recovery prepares the fixed ω^A on A and
    runs B's transpose channel from AC, so it reads only C. ε_A is the fixed-ω
    decoupling error of A, ε_B the transpose-channel error of B; both are also
    evaluated at the composite witness so the additive bound holds state by state.

    When B ∪ AC is beyond the dense limit and the space is an unperturbed
    stabilizer code, ε_B and the composite error are evaluated in stabilizer form
    (StabilizerTransposeRecovery) and the interval's lower bound is taken on a
    traced-down sub-region.
    """
    budget = budget or SearchBudget()
    region, a = resolve_region(space, region)
    if not a:
        raise InvalidArgumentError("扩张引理需要非空区域 A")
    shell_region = boundary_shell(region, ell)
    b = space.code.qubits_in(shell_region)
    if shell is not None and resolve_region(space, shell)[1] != b:
        raise InvalidArgumentError(f"B = {resolve_region(space, shell)[1]} 不是 A 的 ℓ 壳层 {b}")
    if not b:
        raise InvalidArgumentError("A 的 ℓ 壳层为空，无法扩张")
    ab = tuple(sorted(a + b))
    c = space.code.qubits_in(neighborhood(region, 2 * ell).difference(region.union(shell_region)))
    ac = tuple(sorted(a + c))
    key = (space.fingerprint(), list(a), float(ell))
    dense = len(b) + len(ac) <= config.DENSE_QUBIT_LIMIT
    if not dense and space.is_perturbed:
        raise CapacityError(
            f"|B| + |AC| = {len(b) + len(ac)} 超出稠密上限 {config.DENSE_QUBIT_LIMIT}，微扰码没有稳定子形式"
        )

    ctx_a = RegionContext(space, a, b)
    omega = ctx_a.reference_omega
    eps_a_search = maximize_over_code_states(ctx_a.fixed_mu, space.dim_r,
                                             budget.reseeded("expansion", "eps_a", *key))
    diagnostics: List[str] = []
    composite = None
    if dense:
        recovery_b = petz_recovery(space, b, ac)
        eps_b_search = search_recovery_error(recovery_b, space, b, budget.reseeded("expansion", "eps_b", *key))
        prepare = reorder_output(prepare_fixed_state(omega, a, c), ac)
        composite = recovery_b.compose(prepare)
        composite = QuantumChannel(composite.kraus, composite.input_qubits, composite.output_qubits, "expansion",
                                   composite.diagnostics)
        diagnostics.extend(composite.diagnostics)
        composite_search = search_recovery_error(
            composite, space, ab, budget.reseeded("expansion", "composite", *key),
            extra_candidates=[("eps_a_witness", eps_a_search.state), ("eps_b_witness", eps_b_search.state)],
        )
        ctx_b = RegionContext(space, b, ac)
        aligned_b = reorder_output(recovery_b, b + ac).kraus

        def eps_b_of(v: np.ndarray) -> float:
            return ctx_b.recovery_error(aligned_b, v)
    else:
        stabilizer = StabilizerTransposeRecovery(space, b, ac)
        eps_b_of = stabilizer.recovery_error
        eps_b_search = maximize_over_code_states(eps_b_of, space.dim_r,
                                                 budget.reseeded("expansion", "eps_b", *key))
        composite_search = maximize_over_code_states(
            lambda v: stabilizer.prepared_error(v, a, omega), space.dim_r,
            budget.reseeded("expansion", "composite", *key),
            extra_candidates=[("eps_a_witness", eps_a_search.state), ("eps_b_witness", eps_b_search.state)],
        )
        note = f"|B| + |AC| = {len(b) + len(ac)} 超出稠密上限，B 的恢复按稳定子形式计算"
        diagnostics.append(note)
        logger.info(f"ℹ️ {note}")
    witness = composite_search.state
    eps_a_at = ctx_a.fixed_mu(witness)
    eps_b_at = eps_b_of(witness)
    eps_a = max(eps_a_search.value, eps_a_at)
    eps_b = max(eps_b_search.value, eps_b_at)
    composite_error = composite_search.value
    bound = eps_a + eps_b
    margin = eps_a_at + eps_b_at - composite_error
    passed = composite_error <= bound + config.BURES_TOLERANCE and margin >= -config.BURES_TOLERANCE

    if len(ab) + len(c) <= config.DENSE_QUBIT_LIMIT:
        lower_objective = RegionContext(space, ab, c).mu
    else:
        sub = _lower_bound_subregion(space, ab)
        lower_objective = _reference_decoupling(RegionContext(space, sub))
        note = f"AB ∪ C 超出稠密上限，δ 下界取自子区域 {list(sub)} 与参考系的退耦"
        diagnostics.append(note)
        logger.info(f"ℹ️ {note}")
    mu_search = maximize_over_code_states(lower_objective, space.dim_r, budget.reseeded("expansion", "mu", *key),
                                          extra_candidates=[("composite_witness", witness)])
    interval = _lemma_interval(space, ab, c, float(ell), mu_search.value / 2.0, bound, witness, composite,
                               diagnostics)
    if passed:
        logger.info(f"✅ 扩张引理: A={list(a)} → AB={list(ab)} 误差 {composite_error:.3e} ≤ {bound:.3e}")
    else:
        logger.warning(f"❌ 扩张引理失败: A={list(a)} 误差 {composite_error:.3e} > {bound:.3e}")
    return LemmaReport(
        code=space.code.name,
        lemma="expansion",
        region_a=list(a),
        region_b=list(b),
        eps_a=eps_a,
        eps_b=eps_b,
        composite_error=composite_error,
        bound=bound,
        witness_margin=margin,
        passed=passed,
        interval=interval,
        diagnostics=list(interval.diagnostics),
    )


def union_lemma_apply(space: CodeSpace, region_a: RegionLike, region_far: RegionLike, ell: float,
                      budget: SearchBudget = None) -> LemmaReport:
    """
    合并引理：相距至少 ℓ 的两个区域，误差可加

    Measured quantity is sup 𝔅(ρ^{A B R}, ω^A ⊗ ω^B ⊗ ρ^R) against ε_A (fixed-ω
    decoupling of A behind its ℓ-shield) plus ε_B (sup 𝔅(ρ^{BR}, ω^B ⊗ ρ^R)).
    """
    budget = budget or SearchBudget()
    area_a, a = resolve_region(space, region_a)
    area_far, far = resolve_region(space, region_far)
    if not far:
        interval = delta_ell_interval(space, area_a, ell, budget)
        return LemmaReport(code=space.code.name, lemma="union", region_a=list(a), region_b=[],
                           eps_a=interval.delta_upper, eps_b=0.0, composite_error=interval.delta_upper,
                           bound=interval.delta_upper, witness_margin=0.0, passed=True, interval=interval,
                           diagnostics=list(interval.diagnostics))
    shield = space.code.qubits_in(boundary_shell(area_a, ell))
    separation = area_a.distance_to(area_far)
    if set(far) & (set(a) | set(shield)) or separation < ell:
        raise InvalidArgumentError(f"区域间距 {separation} 小于 ℓ = {ell}，或 B 落入 A 的屏蔽层")

    joint = tuple(sorted(a + far))
    key = (space.fingerprint(), list(a), list(far), float(ell))
    ctx_a = RegionContext(space, a, shield)
    ctx_far = RegionContext(space, far)
    ctx_joint = RegionContext(space, joint)
    swap = permutation_matrix(a + far, joint)
    omega_joint = swap @ np.kron(ctx_a.reference_omega, ctx_far.reference_omega) @ swap.conj().T

    def eps_far(v: np.ndarray) -> float:
        return bures_from_fidelity(fidelity_matrix(ctx_far.rho_ar(v),
                                                   np.kron(ctx_far.reference_omega, ctx_far.rho_r(v))))

    def composite(v: np.ndarray) -> float:
        return bures_from_fidelity(fidelity_matrix(ctx_joint.rho_ar(v), np.kron(omega_joint, ctx_joint.rho_r(v))))

    eps_a_search = maximize_over_code_states(ctx_a.fixed_mu, space.dim_r, budget.reseeded("union", "eps_a", *key))
    eps_far_search = maximize_over_code_states(eps_far, space.dim_r, budget.reseeded("union", "eps_b", *key))
    composite_search = maximize_over_code_states(
        composite, space.dim_r, budget.reseeded("union", "composite", *key),
        extra_candidates=[("eps_a_witness", eps_a_search.state), ("eps_b_witness", eps_far_search.state)],
    )
    witness = composite_search.state
    eps_a_at, eps_far_at = ctx_a.fixed_mu(witness), eps_far(witness)
    eps_a = max(eps_a_search.value, eps_a_at)
    eps_b = max(eps_far_search.value, eps_far_at)
    bound = eps_a + eps_b
    composite_error = composite_search.value
    margin = eps_a_at + eps_far_at - composite_error
    passed = composite_error <= bound + config.BURES_TOLERANCE and margin >= -config.BURES_TOLERANCE

    mu_search = maximize_over_code_states(_reference_decoupling(ctx_joint), space.dim_r,
                                          budget.reseeded("union", "mu", *key),
                                          extra_candidates=[("composite_witness", witness)])
    interval = _lemma_interval(space, joint, (), None, mu_search.value / 2.0, bound, witness)
    if passed:
        logger.info(f"✅ 合并引理: A={list(a)} ∪ B={list(far)} 误差 {composite_error:.3e} ≤ {bound:.3e}")
    else:
        logger.warning(f"❌ 合并引理失败: A={list(a)} ∪ B={list(far)} 误差 {composite_error:.3e} > {bound:.3e}")
    return LemmaReport(
        code=space.code.name,
        lemma="union",
        region_a=list(a),
        region_b=list(far),
        eps_a=eps_a,
        eps_b=eps_b,
        composite_error=composite_error,
        bound=bound,
        witness_margin=margin,
        passed=passed,
        interval=interval,
        diagnostics=list(interval.diagnostics),
    )


# ---------------------------------------------------------------------------
# 微扰传递
# ---------------------------------------------------------------------------

def interior_region(region: Region, r: float) -> Region:
    """A^{-r} = {s ∈ A : dist(s, Λ \\ A) > r}"""
    outside = region.complement()
    if outside.is_empty():
        return region
    keep = tuple(s for s in region.sites if Region(region.lattice, (s,)).distance_to(outside) > r + 1e-9)
    return Region(region.lattice, keep)


def light_cone(circuit: LocalCircuit, qubits: Sequence[int]) -> Tuple[LocalCircuit, Tuple[int, ...]]:
    """
    U† E_Z U 中真正起作用的门

    Walking the gates from last to first, a gate that touches the current
    support is kept and widens it; the rest cancel against their inverses.
    """
    live = set(qubits)
    kept: List[Gate] = []
    for gate in reversed(circuit.gates):
        if live & set(gate.qubits):
            kept.append(gate)
            live |= set(gate.qubits)
    kept.reverse()
    return LocalCircuit(tuple(kept), circuit.family, circuit.epsilon), tuple(sorted(live))


def _depolarized_branches(circuit: LocalCircuit, columns: np.ndarray, z: Sequence[int], n: int) -> np.ndarray:
    """
    Ensemble {U† (|z'><z|_Z ⊗ I) U |ψ> / sqrt(d_Z)} of U† E_Z U applied to |ψ>.

    columns is |ψ> as a 2^n x dim_R matrix; returns shape (d_Z², 2^n, dim_R).
    """
    dim_r = columns.shape[1]
    d_z = 2 ** len(z)
    others = [q for q in range(n) if q not in set(z)]
    order = list(z) + others
    inverse = list(np.argsort(order))
    phi = circuit.apply(columns, n)
    t = phi.reshape((2,) * n + (dim_r,)).transpose(order + [n]).reshape(d_z, -1)
    out = np.zeros((d_z, d_z, d_z, t.shape[1]), dtype=complex)
    idx = np.arange(d_z)
    out[idx, :, idx, :] = t[None, :, :]
    count = d_z * d_z
    branches = out.reshape((count,) + (2,) * n + (dim_r,))
    branches = branches.transpose([0] + [1 + i for i in inverse] + [n + 1]).reshape(count, 2 ** n, dim_r)
    flat = branches.transpose(1, 0, 2).reshape(2 ** n, count * dim_r)
    flat = circuit.apply_dagger(flat, n)
    return flat.reshape(2 ** n, count, dim_r).transpose(1, 0, 2) / math.sqrt(d_z)


def perturbation_transfer_check(space0: CodeSpace, circuit: LocalCircuit, region: RegionLike, ell: float,
                                r: float, budget: SearchBudget = None,
                                interval: CorrectabilityInterval = None) -> PerturbationTransferReport:
    """
    经局域线路传递可纠错性

    The transferred recovery for Z = A^{-r} on the code UΠU† is
    S(σ) = U ∘ R ∘ Tr_A ∘ U† (I_Z/d_Z ⊗ σ) with R the transpose channel of A on Π.
    ε_circuit is the searched distance between U† E_Z U and its restriction E' to
    the gates of the light cone lying inside A.
    """
    budget = budget or SearchBudget()
    n = space0.n
    _require_dense(n)
    region, a = resolve_region(space0, region)
    interval = interval or delta_ell_interval(space0, region, ell, budget)
    interior = interior_region(region, r)
    z = space0.code.qubits_in(interior)
    if not z:
        logger.info(f"A={list(a)} 在 r={r} 下内部为空，退化通过")
        return PerturbationTransferReport(code=space0.code.name, region=list(a), interior=[], ell=float(ell + 2 * r),
                                          r=float(r), delta_original=interval.delta_upper, epsilon_circuit=0.0,
                                          transferred_error=0.0, bound=interval.delta_upper, degenerate=True,
                                          passed=True)
    perturbed = perturb(space0, circuit)
    kept, cone = light_cone(circuit, z)
    inside = LocalCircuit(tuple(g for g in kept.gates if set(g.qubits) <= set(a)), circuit.family, circuit.epsilon)
    leaks = not set(cone) <= set(a)
    w0 = space0.isometry
    key = (perturbed.fingerprint(), list(a), float(ell), float(r))

    ctx = RegionContext(space0, interval.region, interval.shield)
    recovery = interval.recovery if interval.recovery is not None else ctx.transpose_channel()
    kraus = recovery.kraus
    d_a, d_b = ctx.dim_a, ctx.dim_b
    order = list(ctx.a) + list(ctx.b) + list(ctx.c)

    def circuit_leakage(v: np.ndarray) -> float:
        psi = w0 @ v
        full = _depolarized_branches(kept, psi, z, n).reshape(-1, psi.size)
        local = _depolarized_branches(inside, psi, z, n).reshape(-1, psi.size)
        return bures_from_fidelity(min(1.0, trace_norm(full.conj() @ local.T)))

    def transferred(v: np.ndarray) -> float:
        psi = w0 @ v
        branches = _depolarized_branches(kept, psi, z, n)
        count = branches.shape[0]
        beta = branches.reshape((count,) + (2,) * n + (space0.dim_r,))
        beta = beta.transpose([0] + [1 + q for q in order] + [n + 1]).reshape(count, d_a, d_b, -1)
        target = psi.reshape((2,) * n + (space0.dim_r,)).transpose(order + [n]).reshape(d_a * d_b, -1)
        m = np.einsum("jabc,xc->jabx", beta, target.conj(), optimize=True)
        t = np.einsum("kxb,jabx->kja", kraus, m, optimize=True)
        return bures_from_fidelity(min(1.0, math.sqrt(float(np.sum(np.abs(t) ** 2)))))

    extra = []
    witness = witness_array(interval)
    if witness is not None:
        extra.append(("interval_witness", witness))
    if leaks:
        leak_search = maximize_over_code_states(circuit_leakage, space0.dim_r,
                                                budget.reseeded("transfer", "leakage", *key), extra)
        epsilon, extra = leak_search.value, extra + [("leakage_witness", leak_search.state)]
    else:
        epsilon = 0.0
    transfer_search = maximize_over_code_states(transferred, space0.dim_r,
                                                budget.reseeded("transfer", "error", *key), extra)
    state = transfer_search.state
    epsilon_at = circuit_leakage(state) if leaks else 0.0
    delta_at = ctx.recovery_error(kraus, state)
    delta = max(interval.delta_upper, delta_at)
    epsilon = max(epsilon, epsilon_at)
    bound = delta + 2.0 * epsilon
    margin = epsilon_at + delta_at - transfer_search.value
    passed = transfer_search.value <= bound + config.BURES_TOLERANCE and margin >= -config.BURES_TOLERANCE
    if passed:
        logger.info(f"✅ 微扰传递: Z={list(z)} 误差 {transfer_search.value:.3e} ≤ {bound:.3e}")
    else:
        logger.warning(f"❌ 微扰传递失败: Z={list(z)} 误差 {transfer_search.value:.3e} > {bound:.3e}")
    return PerturbationTransferReport(
        code=space0.code.name,
        region=list(a),
        interior=list(z),
        ell=float(ell + 2 * r),
        r=float(r),
        delta_original=interval.delta_upper,
        epsilon_circuit=epsilon,
        transferred_error=transfer_search.value,
        bound=bound,
        light_cone=list(cone),
        witness_margin=margin,
        passed=passed,
        diagnostics=transfer_search.diagnostics,
    )
