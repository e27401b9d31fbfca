"""
报告与实验配置模型
Versioned pydantic schemas for every report the services emit, the experiment
configuration file and the run manifest.
"""
import math
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from models.config import config


class ReportModel(BaseModel):
    """所有报告的基类（带版本号）"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    report_version: int = config.REPORT_VERSION
    diagnostics: List[str] = Field(default_factory=list)

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json")


# ---------------------------------------------------------------------------
# 可纠错性
# ---------------------------------------------------------------------------

class CorrectabilityInterval(ReportModel):
    """δ 或 δ_ℓ(A) 的区间估计及见证"""
    code: str
    region: List[int]
    shield: List[int] = Field(default_factory=list)
    ell: Optional[float] = None
    delta_lower: float = Field(..., ge=0.0, le=1.0)
    delta_upper: float = Field(..., ge=0.0, le=1.0)
    mu: float = Field(0.0, ge=0.0, le=1.0)
    witness_state: Dict[str, Any] = Field(default_factory=dict)
    search: Dict[str, Any] = Field(default_factory=dict)
    recovery: Optional[Any] = Field(default=None, exclude=True)

    @property
    def consistent(self) -> bool:
        return self.delta_lower <= self.delta_upper + config.CHECK_SLACK

    @property
    def exact(self) -> bool:
        return self.delta_upper < config.EXACT_THRESHOLD


class SandwichReport(ReportModel):
    """(1/9) δ_lower² ≤ μ ≤ 2 δ_upper"""
    code: str
    region: List[int]
    ell: float
    mu: float
    delta_lower: float
    delta_upper: float
    lower_margin: float
    upper_margin: float
    passed: bool


class DisentanglingReport(ReportModel):
    code: str
    region: List[int]
    ell: float
    deviation: float
    fixed_environment_deviation: float
    delta_upper: float
    isometry_residual: float
    unitary_extension_residual: Optional[float] = None
    product_form: bool
    passed: bool


class MutualInformationReport(ReportModel):
    """I(A:R) 与可纠错区域互信息上界的比较"""
    code: str
    region: List[int]
    ell: float
    mutual_information: float
    delta_upper: float
    bound: Optional[float] = None
    status: str
    passed: bool


# ---------------------------------------------------------------------------
# 清理与引理
# ---------------------------------------------------------------------------

class CleaningReport(ReportModel):
    code: str
    region: List[int]
    logical: str
    delta: float
    right_norm: float  # ||(U - V) Π||
    left_norm: float  # ||Π (U - V)||
    sandwich_norm: float  # ||Π (U - V) Π||
    rhs: float  # 4 sqrt(δ)
    sandwich_rhs: float  # 2 ε_1 ||U||，ε_1 = 2√2 δ 为迹范数误差
    pull_back_norm: float
    logical_norm: float
    support_ok: bool
    right_passed: bool
    left_passed: bool
    sandwich_passed: bool

    @computed_field
    @property
    def passed(self) -> bool:
        norm_ok = self.pull_back_norm <= self.logical_norm + config.CHECK_SLACK
        return self.right_passed and self.left_passed and self.sandwich_passed and self.support_ok and norm_ok


class ConverseCleaningReport(ReportModel):
    code: str
    region: List[int]
    epsilon: float
    per_logical: Dict[str, float]
    methods: Dict[str, str]
    trace_norm_sup: float
    bound: float
    implied_correctability: float
    twirl_residual: float
    passed: bool


class LemmaReport(ReportModel):
    """区域扩张 / 区域合并的误差可加性证书"""
    code: str
    lemma: str
    region_a: List[int]
    region_b: List[int]
    eps_a: float
    eps_b: float
    composite_error: float
    bound: float
    witness_margin: float
    passed: bool
    interval: CorrectabilityInterval


class PerturbationTransferReport(ReportModel):
    code: str
    region: List[int]
    interior: List[int]
    ell: float
    r: float
    delta_original: float
    epsilon_circuit: float
    transferred_error: float
    bound: float
    light_cone: List[int] = Field(default_factory=list)
    witness_margin: float = 0.0
    degenerate: bool = False
    passed: bool


class EquivalenceReport(ReportModel):
    """五个等价条件的逐项结果"""
    code: str
    region: List[int]
    ell: float
    conditions: Dict[str, bool]
    values: Dict[str, float]
    agree: bool

    @computed_field
    @property
    def all_pass(self) -> bool:
        return all(self.conditions.values())


# ---------------------------------------------------------------------------
# 界
# ---------------------------------------------------------------------------

class BoundEvaluation(ReportModel):
    kind: str = "tradeoff"
    n: int
    k: int
    d: float
    delta: float
    ell: float
    D: int
    epsilon: float = Field(..., ge=0.0)
    prefactor: float
    lhs: float
    rhs: float
    c: float
    c_prime: float
    vacuous: bool
    satisfied: bool
    extra: Dict[str, Any] = Field(default_factory=dict)

    @computed_field
    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


class DistanceBoundReport(ReportModel):
    L: int
    D: int
    ell: float
    delta: float
    bound: float
    guard: bool
    measured_distance: Optional[int] = None
    code: Optional[str] = None
    passed: Optional[bool] = None


class EntropyChainReport(ReportModel):
    code: str
    k_log2: float
    entropy_r: float
    entropy_z: float
    mi_x_r: float
    mi_y_r: float
    z_size: int
    z_bound: float
    links: Dict[str, bool]
    passed: bool


class DegeneracyReport(ReportModel):
    code: str
    ell: float
    eps_ell: float
    status: str
    log_dim: float
    entropy_z: Optional[float] = None
    z_size: int = 0
    z_bound: Optional[float] = None
    correctability: Optional[float] = None
    prefactor: Optional[float] = None
    flexible_residuals: Dict[str, float] = Field(default_factory=dict)
    links: Dict[str, bool] = Field(default_factory=dict)
    passed: bool


# ---------------------------------------------------------------------------
# 实验配置
# ---------------------------------------------------------------------------

class PerturbationSpec(BaseModel):
    family: str = Field("xx", description="门族: xx / zz / heisenberg / random")
    epsilon: float = Field(0.0, ge=0.0, description="门强度")
    depth: int = Field(1, ge=0, description="砖墙层数")


class BudgetSpec(BaseModel):
    restarts: int = Field(config.SEARCH_RESTARTS, ge=0)
    max_iterations: int = Field(config.SEARCH_MAX_ITERATIONS, ge=1)
    tolerance: float = Field(config.SEARCH_TOLERANCE, gt=0.0)


class TradeoffPoint(BaseModel):
    n: int = Field(..., ge=1)
    k: int = Field(..., ge=1)
    d: float = Field(..., gt=0.0)
    delta: float = Field(0.0, ge=0.0)
    ell: float = Field(..., gt=0.0)
    D: int = Field(..., ge=1)


class ProfileSpec(BaseModel):
    """δ(ℓ) = a e^{-ℓ/ξ}，在 ℓ = ξ log n 处求值"""
    n_values: List[int] = Field(..., min_length=1)
    k: int = Field(..., ge=1)
    a: float = Field(1.0, gt=0.0)
    xi: float = Field(1.0, gt=0.0)
    D: int = Field(2, ge=1)
    distance_exponent: float = Field(0.5, gt=0.0, description="d = n^exponent")


class DistanceCheckSpec(BaseModel):
    code: str
    ell: float = Field(1.0, gt=0.0)
    delta: float = Field(0.0, ge=0.0)


class LogicalSupportSpec(BaseModel):
    """逻辑支撑区域 Y 的大小检查；d 缺省时取码的实测距离"""
    code: str
    d: Optional[int] = Field(None, ge=2)
    ell: float = Field(1.0, gt=0.0)
    delta: float = Field(0.0, ge=0.0)


class EntropyChainSpec(BaseModel):
    code: str
    cell_side: int = Field(..., ge=1)
    gap: int = Field(1, ge=1)


class DegeneracySpec(BaseModel):
    code: str
    ell: float = Field(..., gt=0.0)
    eps_ell: float = Field(0.0, ge=0.0)


RegionSpec = Union[str, List[int], List[List[int]]]


class ExperimentConfig(BaseModel):
    """实验配置文件（JSON）"""
    model_config = ConfigDict(extra="forbid")

    code: Optional[str] = Field(None, description="码库名称或码文件路径")
    regions: List[RegionSpec] = Field(default_factory=list, description="量子比特列表、格点坐标列表、'singles' 或 'pairs'")
    ells: List[float] = Field(default_factory=lambda: [1.0], description="屏蔽宽度列表")
    perturbation: Optional[PerturbationSpec] = None
    budget: BudgetSpec = Field(default_factory=BudgetSpec)
    seed: int = Field(config.DEFAULT_SEED, description="主随机种子")
    out: str = Field("reports", description="输出目录")
    c: float = Field(config.CONSTANT_C, gt=0.0)
    c_prime: float = Field(config.CONSTANT_C_PRIME, gt=0.0)
    c_double_prime: float = Field(config.CONSTANT_C_DOUBLE_PRIME, gt=0.0)
    sweep: Optional[List[TradeoffPoint]] = None
    profile: Optional[ProfileSpec] = None
    distance_checks: List[DistanceCheckSpec] = Field(default_factory=list)
    logical_support: List[LogicalSupportSpec] = Field(default_factory=list)
    entropy_chains: List[EntropyChainSpec] = Field(default_factory=list)
    degeneracy_checks: List[DegeneracySpec] = Field(default_factory=list)

    @field_validator("ells")
    @classmethod
    def _positive_ells(cls, value: List[float]) -> List[float]:
        if not value or any(not math.isfinite(v) or v <= 0 for v in value):
            raise ValueError("ells 必须为非空的正数列表")
        return value

    @field_validator("regions")
    @classmethod
    def _region_forms(cls, value: List[RegionSpec]) -> List[RegionSpec]:
        for item in value:
            if isinstance(item, str) and item not in ("singles", "pairs"):
                raise ValueError(f"未知的区域关键字 {item!r}（可选: singles, pairs）")
        return value

    @model_validator(mode="after")
    def _sweep_not_empty(self) -> "ExperimentConfig":
        others = self.distance_checks or self.logical_support or self.entropy_chains or self.degeneracy_checks
        if self.sweep is not None and not self.sweep and self.profile is None and not others:
            raise ValueError("sweep 为空且未给出 profile 或其他检查")
        return self


class TaskRecord(BaseModel):
    key: str
    status: str
    cache_hit: bool = False
    wall_seconds: float = 0.0
    report_path: Optional[str] = None


class RunManifest(BaseModel):
    """运行清单；时间戳只出现在这里，报告本身可逐字节复现"""
    command: str
    config_hash: str
    tool_version: str = config.TOOL_VERSION
    seed: int
    started_at: str
    tasks: List[TaskRecord] = Field(default_factory=list)
    failures: List[str] = Field(default_factory=list)

    @property
    def cache_hit_ratio(self) -> float:
        if not self.tasks:
            return 0.0
        return sum(t.cache_hit for t in self.tasks) / len(self.tasks)
