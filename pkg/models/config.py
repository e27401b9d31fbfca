"""
配置模型
所有数值容差、容量上限、搜索预算与运行参数集中管理
"""
import os
import logging

try:
    import uvloop  # noqa: F401
    UVLOOP_AVAILABLE = True
except ImportError:
    UVLOOP_AVAILABLE = False


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None or not value.strip():
        return default
    try:
        return int(value)
    except ValueError:
        return default


class Config:
    """应用配置类"""

    # 日志配置
    LOG_LEVEL = getattr(logging, os.environ.get("AQEC_LOG_LEVEL", "INFO").upper(), logging.INFO)
    LOG_MAX_BYTES = 10 * 1024 * 1024  # 日志文件最大大小（字节），默认 10MB
    LOG_BACKUP_COUNT = 10  # 保留的日志备份文件数量
    LOG_DIR = os.environ.get("AQEC_LOG_DIR", os.path.join(os.getcwd(), "logs"))

    # 数值容差
    HERMITIAN_TOLERANCE = 1e-10
    TRACE_TOLERANCE = 1e-10
    PSD_TOLERANCE = 1e-10
    NORM_TOLERANCE = 1e-12
    SQRT_CLIP = 1e-12  # 矩阵平方根的特征值截断
    ENTROPY_CUTOFF = 1e-14  # 熵计算中视为零的特征值
    PSEUDO_INVERSE_TOLERANCE = 1e-12
    PROJECTOR_TOLERANCE = 1e-9
    UNITARY_TOLERANCE = 1e-10
    CHECK_SLACK = 1e-8  # 不等式校验的默认松弛
    SANDWICH_TOLERANCE = 1e-6
    EXACT_THRESHOLD = 1e-6  # 低于该值视为精确可纠错
    BURES_TOLERANCE = 1e-6  # Bures 距离 sqrt(1 - F) 会把舍入误差放大到 1e-8 量级

    # 容量上限
    DENSE_QUBIT_LIMIT = 12  # 稠密投影算符 2^n x 2^n
    STATEVECTOR_QUBIT_LIMIT = 22  # 编码等距 2^n x 2^k
    KL_REGION_LIMIT = 6  # Knill-Laflamme 枚举 4^|A| 个 Pauli
    DISTANCE_QUBIT_LIMIT = 30
    GRAM_ENTRY_LIMIT = 2 ** 23  # ρ^{AB} 线性展开 dim_R^2 x dim_AB^2 的缓存上限
    SUBREGION_QUBIT_LIMIT = 8  # 稠密 AB ∪ C 不可行时，下界子区域 ρ^{XR} 的量子比特数上限
    UNITARY_EXTENSION_DIM_LIMIT = 2048

    # 最坏态搜索
    SEARCH_RESTARTS = 16
    SEARCH_TOLERANCE = 1e-7
    SEARCH_MAX_ITERATIONS = 500
    FINITE_DIFFERENCE_STEP = 1e-6
    CLEANING_MAX_ITERATIONS = 300

    # 界常数（未指定的绝对常数，默认取 1）
    CONSTANT_C = 1.0
    CONSTANT_C_PRIME = 1.0
    CONSTANT_C_DOUBLE_PRIME = 1.0
    DEGENERACY_GUARD = 0.1  # eps_ell 超过该值时简并度检查不下结论

    # 运行配置
    DEFAULT_SEED = 20240601
    DEFAULT_JOBS = max(1, min(8, _env_int("AQEC_JOBS", os.cpu_count() or 1)))
    CACHE_DIR = os.environ.get("AQEC_CACHE_DIR", os.path.join(os.path.expanduser("~"), ".cache", "aqec"))
    REPORT_VERSION = 1
    TOOL_VERSION = "1.0.0"


# 全局配置实例
config = Config()
