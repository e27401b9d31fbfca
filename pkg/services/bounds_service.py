"""
界与等价性服务
Tradeoff-bound arithmetic, the distance and logical-support bounds, the entropy
chains behind the tradeoff and degeneracy arguments, and the five-way exact
correctability equivalence suite.

The absolute constants of the asymptotic bounds are inputs (defaults in config);
reports carry the measured slack instead of asserting unknown constants.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from models.codes import CodeSpace, StabilizerCode
from models.config import config
from models.errors import InvalidArgumentError
from models.reports import (
    BoundEvaluation,
    DegeneracyReport,
    DistanceBoundReport,
    EntropyChainReport,
    EquivalenceReport,
)
from services.cleaning_service import converse_cleaning
from services.code_service import (
    clean_logical,
    logical_operators,
    projector_from_stabilizers,
    region_supports_logical,
    stabilizer_distance,
)
from services.correctability_service import (
    RegionContext,
    delta_ell_interval,
    disentangling_check,
    knill_laflamme_check,
    resolve_region,
    shield_context,
)
from services.geometry_service import checkerboard_partition, four_square_partition, logical_support_grid
from services.quantum_kernel import entropy_matrix
from services.search_service import SearchBudget, maximize_over_code_states
from utils.helpers import operator_norm

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# 权衡界
# ---------------------------------------------------------------------------

def tradeoff_prefactor(epsilon: float, c: float) -> float:
    """1 - c ε log(1/ε)，ε = 0 时为 1"""
    if epsilon <= 0:
        return 1.0
    return 1.0 - c * epsilon * math.log(1.0 / epsilon)


def evaluate_tradeoff(n: int, k: int, d: float, delta: float, ell: float, D: int, c: float = None,
                      c_prime: float = None) -> BoundEvaluation:
    """
    (1 - c ε log(1/ε)) k d^{2/(D-1)} ≤ c' n ℓ^{2D/(D-1)}，ε = nδ/d

    The evaluation is vacuous when the prefactor is not positive, and also for
    ε ≥ 1 where log(1/ε) changes sign; a vacuous evaluation counts as satisfied.
    """
    c = config.CONSTANT_C if c is None else c
    c_prime = config.CONSTANT_C_PRIME if c_prime is None else c_prime
    if D < 2:
        raise InvalidArgumentError(f"D = {D}：指数 2/(D-1) 在 D < 2 时无定义")
    if n < 1 or k < 1 or d <= 0 or ell <= 0 or delta < 0:
        raise InvalidArgumentError(f"非法参数: n={n}, k={k}, d={d}, ell={ell}, delta={delta}")
    epsilon = n * delta / d
    prefactor = tradeoff_prefactor(epsilon, c)
    vacuous = prefactor <= 0 or epsilon >= 1
    lhs = prefactor * k * d ** (2.0 / (D - 1))
    rhs = c_prime * n * ell ** (2.0 * D / (D - 1))
    satisfied = vacuous or lhs <= rhs * (1 + config.CHECK_SLACK)
    if not satisfied:
        logger.warning(f"⚠️ 权衡界不成立: n={n} k={k} d={d} ell={ell}: {lhs:.4g} > {rhs:.4g}")
    return BoundEvaluation(
        kind="tradeoff",
        n=n,
        k=k,
        d=d,
        delta=delta,
        ell=ell,
        D=D,
        epsilon=epsilon,
        prefactor=prefactor,
        lhs=lhs,
        rhs=rhs,
        c=c,
        c_prime=c_prime,
        vacuous=vacuous,
        satisfied=satisfied,
    )


def tradeoff_profile(n_values: Sequence[int], k: int, d_fn: Callable[[int], float], a: float = 1.0,
                     xi: float = 1.0, D: int = 2, c: float = None, c_prime: float = None) -> List[BoundEvaluation]:
    """
    δ(ℓ) = a e^{-ℓ/ξ} 在 ℓ = ξ log n 处求值

    With this choice nδ = a, so ε = a/d no longer grows with n and the bound
    takes the form k d^{2/(D-1)} ≤ O(n (log n)^{2D/(D-1)}).
    """
    if a <= 0 or xi <= 0:
        raise InvalidArgumentError("a 与 xi 必须为正")
    rows = []
    for n in n_values:
        if n < 2:
            raise InvalidArgumentError(f"n = {n}：需要 n ≥ 2 使 ℓ = ξ log n > 0")
        ell = xi * math.log(n)
        delta = a * math.exp(-ell / xi)
        evaluation = evaluate_tradeoff(n, k, float(d_fn(n)), delta, ell, D, c, c_prime)
        evaluation.kind = "profile"
        evaluation.extra = {"a": a, "xi": xi, "log_n": math.log(n)}
        rows.append(evaluation)
    return rows


def power_law_distance(exponent: float) -> Callable[[int], float]:
    return lambda n: float(n) ** exponent


# ---------------------------------------------------------------------------
# 距离界与逻辑支撑
# ---------------------------------------------------------------------------

def code_linear_size(code: StabilizerCode) -> int:
    """格点物理边长 L（环面码的双倍格点按 spacing 折回）"""
    lat = code.lattice
    return int(round(max(lat.extents) * lat.spacing))


def code_distance_bound_check(L: int, D: int, ell: float, delta: float,
                              code: Optional[StabilizerCode] = None) -> DistanceBoundReport:
    """
    d ≤ 5 ℓ L^{D-1}，只在 10 L δ < ℓ 时成立

    With a code the measured distance is compared against the bound whenever the
    guard holds; otherwise no claim is made and passed stays None.
    """
    if L < 1 or D < 1 or ell <= 0 or delta < 0:
        raise InvalidArgumentError(f"非法参数: L={L}, D={D}, ell={ell}, delta={delta}")
    bound = 5.0 * ell * L ** (D - 1)
    guard = 10.0 * L * delta < ell
    report = DistanceBoundReport(L=L, D=D, ell=ell, delta=delta, bound=bound, guard=guard)
    if code is not None:
        measured = stabilizer_distance(code)
        report.code = code.name
        report.measured_distance = measured
        if guard:
            report.passed = measured <= bound
            if not report.passed:
                logger.warning(f"❌ {code.name}: d = {measured} > 5ℓL^(D-1) = {bound}")
    return report


def code_distance_bound_for(code: StabilizerCode, ell: float, delta: float = 0.0) -> DistanceBoundReport:
    return code_distance_bound_check(code_linear_size(code), code.lattice.dimension, ell, delta, code)


def logical_support_evaluate(target: Union[CodeSpace, StabilizerCode], d: int, ell: float, delta: float = 0.0,
                             c_double_prime: float = None) -> BoundEvaluation:
    """
    逻辑支撑区域 Y 的大小

    X is the grid of separated cubes whose ℓ-shells hold fewer than d sites, Y the
    rest. The check is d̃ d^{1/(D-1)} ≤ c'' n ℓ^{D/(D-1)} with d̃ = |Y| in qubits;
    for exact codes the cubes must not support a logical, and every logical is
    cleaned off X so that its support lies in Y.
    """
    c_double_prime = config.CONSTANT_C_DOUBLE_PRIME if c_double_prime is None else c_double_prime
    code = target.code if isinstance(target, CodeSpace) else target
    lat = code.lattice
    D = lat.dimension
    plan = logical_support_grid(lat, d, ell)
    x_region = plan.role_union("x_cell")
    y_qubits = code.qubits_in(plan.regions["Y"])
    n = code.n
    y_size = len(y_qubits)
    lhs = y_size * d ** (1.0 / (D - 1))
    rhs = c_double_prime * n * ell ** (D / (D - 1))
    epsilon = n * delta / d
    extra: Dict[str, object] = {
        "y_qubits": list(y_qubits),
        "x_qubits": list(code.qubits_in(x_region)),
        "cells": len(plan.names_with_role("x_cell")),
        "cell_side": plan.metadata["cell_side"],
        "accuracy": math.sqrt(epsilon),
        "partition_ok": plan.verify()["ok"],
    }
    diagnostics: List[str] = []
    if delta == 0:
        x_correctable = not region_supports_logical(code, x_region)
        cleaned = {}
        for logical in logical_operators(code):
            moved = clean_logical(code, logical, x_region)
            cleaned[logical.name] = moved is not None and set(moved.support) <= set(y_qubits)
        extra["x_correctable"] = x_correctable
        extra["logicals_in_y"] = cleaned
        if not x_correctable:
            diagnostics.append("X 方块支撑逻辑算符，d 参数过大")
    satisfied = lhs <= rhs * (1 + config.CHECK_SLACK)
    return BoundEvaluation(
        kind="logical_support",
        n=n,
        k=code.k,
        d=float(d),
        delta=delta,
        ell=ell,
        D=D,
        epsilon=epsilon,
        prefactor=1.0,
        lhs=lhs,
        rhs=rhs,
        c=config.CONSTANT_C,
        c_prime=c_double_prime,
        vacuous=False,
        satisfied=satisfied,
        extra=extra,
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# 熵链
# ---------------------------------------------------------------------------

def _maximally_entangled(dim_r: int) -> np.ndarray:
    return np.eye(dim_r, dtype=complex) / math.sqrt(dim_r)


def code_state_entropy(space: CodeSpace, qubits: Sequence[int]) -> float:
    """
    S(ρ^Q)，ρ = Π / Tr Π

    Large Q is evaluated on the purification as S(Q^c R), which keeps the dense
    matrix on the smaller side.
    """
    qubits = sorted(set(int(q) for q in qubits))
    if not qubits:
        return 0.0
    rest = [q for q in range(space.n) if q not in set(qubits)]
    if 2 ** len(qubits) <= 2 ** len(rest) * space.dim_r:
        ctx = RegionContext(space, qubits)
        return entropy_matrix(ctx.rho_a_tau(ctx.maximally_mixed_tau))
    return entropy_matrix(RegionContext(space, rest).rho_ar(_maximally_entangled(space.dim_r)))


def tradeoff_entropy_chain(space: CodeSpace, cell_side: int, gap: int) -> EntropyChainReport:
    """
    棋盘划分上的熵链

    For the purification of Π / Tr Π, S(R) = k log 2 and, by subadditivity on
    XZ and YZ, k log 2 ≤ S(Z) + (I(X:R) + I(Y:R))/2 ≤ |Z| log 2 + (I(X:R) + I(Y:R))/2.
    Each link is reported separately.
    """
    code = space.code
    plan = checkerboard_partition(code.lattice, cell_side, gap)
    x = code.qubits_in(plan.role_union("x_cell"))
    y = code.qubits_in(plan.role_union("y_cell"))
    z = code.qubits_in(plan.regions["Z"])
    v = _maximally_entangled(space.dim_r)
    tol = config.CHECK_SLACK
    k_log2 = space.k * LOG2
    entropy_r = entropy_matrix(RegionContext.rho_r(v))
    mi_x = RegionContext(space, x).mutual_information_ar(v) if x else 0.0
    mi_y = RegionContext(space, y).mutual_information_ar(v) if y else 0.0
    entropy_z = code_state_entropy(space, z)
    z_bound = len(z) * LOG2
    mean_mi = (mi_x + mi_y) / 2
    links = {
        "entropy_r": abs(entropy_r - k_log2) <= 1e-9,
        "lower": k_log2 <= entropy_z + mean_mi + tol,
        "upper": entropy_z <= z_bound + tol,
    }
    passed = all(links.values())
    if not passed:
        logger.warning(f"❌ 熵链失败: {space.code.name} {links}")
    return EntropyChainReport(
        code=space.code.name,
        k_log2=k_log2,
        entropy_r=entropy_r,
        entropy_z=entropy_z,
        mi_x_r=mi_x,
        mi_y_r=mi_y,
        z_size=len(z),
        z_bound=z_bound,
        links=links,
        passed=passed,
        diagnostics=[f"棋盘方块 {len(plan.regions) - 1} 个, |X|={len(x)}, |Y|={len(y)}, |Z|={len(z)}"],
    )


def _flexible_residual(space: CodeSpace, logical, avoid) -> float:
    """
    把逻辑算符移出 avoid 后的 min_c ||(U - c V) Π||；移不出时为无穷

    The cleaned Pauli differs from U by a stabilizer whose sign is not tracked,
    so the residual is taken up to a global phase c.
    """
    moved = clean_logical(space.code, logical, avoid)
    if moved is None:
        return float("inf")
    w = space.isometry
    u_cols = space.apply_logical(logical, w)
    v_cols = space.apply_logical(moved, w)
    overlap = np.vdot(v_cols, u_cols)
    phase = overlap / abs(overlap) if abs(overlap) > config.NORM_TOLERANCE else 1.0
    return operator_norm(u_cols - phase * v_cols)


def flexible_degeneracy_check(space: CodeSpace, ell: float, eps_ell: float,
                              budget: SearchBudget = None) -> DegeneracyReport:
    """
    柔性逻辑算符 ⇒ 简并度上界

    On the four-square split of a 2D torus, every logical must be approximated
    within eps_ell both by an operator avoiding X (on YZ) and one avoiding Y (on
    XZ). Then X and Y are sqrt(5 eps_ell / 2)-correctable and
    (1 - c sqrt(eps_ell)) log dim Π ≤ S(ρ^Z) ≤ |Z| log 2. When only one direction
    of strings exists the check refuses to certify.
    """
    code = space.code
    plan = four_square_partition(code.lattice, ell)
    log_dim = space.k * LOG2
    x = code.qubits_in(plan.role_union("x_square"))
    y = code.qubits_in(plan.role_union("y_square"))
    z = code.qubits_in(plan.role_union("corner_disk"))
    z_bound = len(z) * LOG2
    base = dict(code=code.name, ell=float(ell), eps_ell=float(eps_ell), log_dim=log_dim, z_size=len(z),
                z_bound=z_bound)
    if eps_ell < 0:
        raise InvalidArgumentError("eps_ell 必须非负")
    if eps_ell > config.DEGENERACY_GUARD:
        logger.info(f"eps_ell = {eps_ell} 超过阈值 {config.DEGENERACY_GUARD}，不下结论")
        return DegeneracyReport(status="inconclusive", passed=True, **base)
    bare = [name for name in plan.names_with_role("corner_disk") if not code.qubits_in(plan.regions[name])]
    if bare:
        logger.warning(f"⚠️ {code.name}: ℓ = {ell} 的角点圆盘 {bare} 不含量子比特，拒绝认证")
        return DegeneracyReport(status="refused", passed=True,
                                diagnostics=[f"角点圆盘不含量子比特: {bare}（半径 {plan.metadata['disk_radius']}）"],
                                **base)

    residuals: Dict[str, float] = {}
    for logical in space.logicals:
        residuals[f"{logical.name}@YZ"] = _flexible_residual(space, logical, plan.role_union("x_square"))
        residuals[f"{logical.name}@XZ"] = _flexible_residual(space, logical, plan.role_union("y_square"))
    tol = config.SANDWICH_TOLERANCE
    if any(r > eps_ell + tol for r in residuals.values()):
        logger.warning(f"⚠️ {code.name}: 逻辑算符无法同时移到 YZ 与 XZ，拒绝认证")
        finite = {k: (v if math.isfinite(v) else -1.0) for k, v in residuals.items()}
        return DegeneracyReport(status="refused", passed=True, flexible_residuals=finite,
                                diagnostics=["缺少某一方向的柔性逻辑算符（-1 表示无法清理）"], **base)

    budget = budget or SearchBudget.candidates_only()
    correctability = math.sqrt(5.0 * eps_ell / 2.0)
    links: Dict[str, bool] = {}
    diagnostics: List[str] = []
    for label, qubits in (("x", x), ("y", y)):
        if not qubits:
            links[f"{label}_correctable"] = True
            continue
        converse = converse_cleaning(space, qubits, budget=budget)
        links[f"{label}_correctable"] = converse.epsilon <= eps_ell + tol and converse.passed
        diagnostics.extend(converse.diagnostics)
    entropy_z = code_state_entropy(space, z)
    prefactor = 1.0 - config.CONSTANT_C * math.sqrt(eps_ell)
    links["lower"] = prefactor * log_dim <= entropy_z + tol
    links["upper"] = entropy_z <= z_bound + tol
    passed = all(links.values())
    status = "certified" if passed else "violated"
    if passed:
        logger.info(f"✅ {code.name}: log dim Π = {log_dim:.4f} ≤ S(Z) = {entropy_z:.4f} ≤ {z_bound:.4f}")
    else:
        logger.warning(f"❌ 简并度熵链失败: {code.name} {links}")
    return DegeneracyReport(status=status, entropy_z=entropy_z, correctability=correctability, prefactor=prefactor,
                            flexible_residuals=residuals, links=links, passed=passed, diagnostics=diagnostics, **base)


# ---------------------------------------------------------------------------
# 五重等价
# ---------------------------------------------------------------------------

EQUIVALENCE_CONDITIONS = ("knill_laflamme", "decoupling", "recovery", "disentangling", "cleaning")


def equivalence_suite(code: StabilizerCode, region, ell: float, budget: SearchBudget = None) -> EquivalenceReport:
    """
    精确可纠错的五个等价条件

    (i) Knill-Laflamme, (ii) sup I(A:CR) vanishes, (iii) the transpose channel
    recovers A from its ℓ-shield, (iv) that recovery disentangles into product
    form, (v) no logical Pauli is supported on A. For stabilizer codes with
    ℓ at least the generator diameter the five agree.
    """
    budget = budget or SearchBudget()
    space = projector_from_stabilizers(code)
    area, a = resolve_region(space, region)
    threshold = config.EXACT_THRESHOLD
    diagnostics: List[str] = []
    if ell < code.generator_diameter():
        diagnostics.append(f"ℓ = {ell} 小于生成元直径 {code.generator_diameter():.3f}，等价性不作保证")

    kl_ok, kl_residual = knill_laflamme_check(space, a)
    ctx, _ = shield_context(space, area, ell)
    mi_budget = budget if a else SearchBudget.candidates_only(budget.seed)
    mi = maximize_over_code_states(ctx.mutual_information_acr, space.dim_r,
                                   mi_budget.reseeded("equivalence", space.fingerprint(), list(a), float(ell)))
    interval = delta_ell_interval(space, area, ell, budget)
    disentangling = disentangling_check(space, area, ell, budget, interval)
    supports = region_supports_logical(code, a)

    conditions = {
        "knill_laflamme": kl_ok,
        "decoupling": mi.value < threshold,
        "recovery": interval.delta_upper < threshold,
        "disentangling": disentangling.fixed_environment_deviation < threshold,
        "cleaning": not supports,
    }
    values = {
        "knill_laflamme": kl_residual,
        "decoupling": mi.value,
        "recovery": interval.delta_upper,
        "disentangling": disentangling.fixed_environment_deviation,
        "cleaning": 1.0 if supports else 0.0,
    }
    agree = len(set(conditions.values())) == 1
    if agree:
        state = "可纠错" if conditions["cleaning"] else "不可纠错（一致）"
        logger.info(f"✅ {code.name} A={list(a)} ℓ={ell}: 五个条件一致，{state}")
    else:
        logger.warning(f"❌ {code.name} A={list(a)} ℓ={ell}: 等价条件不一致 {conditions}")
    return EquivalenceReport(
        code=code.name,
        region=list(a),
        ell=float(ell),
        conditions=conditions,
        values=values,
        agree=agree,
        diagnostics=diagnostics + list(interval.diagnostics),
    )
