"""
通用工具函数
"""
import json
import hashlib
from typing import Any

import numpy as np


def _default(obj: Any):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"不可序列化的类型: {type(obj).__name__}")


def canonical_json(payload: Any) -> str:
    """
    生成规范 JSON（键排序、紧凑分隔符）

    同一内容不论键顺序如何都得到相同字符串，用于哈希与可复现报告
    """
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_default, ensure_ascii=False)


def content_hash(*parts: Any) -> str:
    """对任意可 JSON 化内容计算 sha256"""
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            digest.update(part)
        else:
            digest.update(canonical_json(part).encode("utf-8"))
        digest.update(b"\x1f")
    return digest.hexdigest()


def derive_seed(seed: int, *keys: Any) -> int:
    """从主种子与任务键派生 64 位子种子（与调度顺序无关）"""
    digest = hashlib.sha256(canonical_json([int(seed), list(keys)]).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def operator_norm(matrix: np.ndarray) -> float:
    """最大奇异值"""
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))
