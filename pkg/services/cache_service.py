"""
结果缓存服务
Content-addressed cache of computed reports on the local filesystem.

Entries live at <root>/<hash[:2]>/<hash>.json and hold {"meta": ..., "payload": ...}.
Writes go through a temporary file and os.replace, so a reader never sees a
partial entry. Entries that fail to parse are moved to <root>/quarantine.
"""
import json
import logging
import os
import shutil
import time
from typing import Any, Dict, List, Optional

import aiofiles

from models.config import config
from utils.helpers import canonical_json, content_hash

logger = logging.getLogger(__name__)

QUARANTINE_DIR = "quarantine"


def cache_key(kind: str, fingerprint: str, region: List[int], ell: Optional[float], budget: dict,
              extra: Any = None) -> str:
    """(类别, 码指纹, 区域, ℓ, 预算, 工具版本) 的内容哈希"""
    return content_hash(kind, fingerprint, sorted(region), ell, budget, config.TOOL_VERSION, extra)


async def atomic_write_bytes(path: str, data: bytes):
    """先写临时文件再原子替换"""
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    tmp = f"{path}.tmp-{os.getpid()}"
    try:
        async with aiofiles.open(tmp, "wb") as handle:
            await handle.write(data)
            await handle.flush()
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


class CacheService:
    """
    缓存服务
    以内容哈希为键的报告缓存
    """

    def __init__(self, root: str = None):
        self.root = root or config.CACHE_DIR
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> str:
        return os.path.join(self.root, key[:2], f"{key}.json")

    def _quarantine(self, path: str, reason: str):
        target_dir = os.path.join(self.root, QUARANTINE_DIR)
        os.makedirs(target_dir, exist_ok=True)
        target = os.path.join(target_dir, os.path.basename(path))
        try:
            shutil.move(path, target)
        except OSError as e:
            logger.error(f"❌ 隔离缓存条目失败: {path} - {str(e)}")
            return
        logger.warning(f"⚠️ 缓存条目损坏，已隔离: {os.path.basename(path)} ({reason})")

    async def get(self, key: str) -> Optional[Dict[str, Any]]:
        """
        读取缓存

        Returns:
            payload 字典；未命中或条目损坏时返回 None
        """
        path = self._path(key)
        if not os.path.exists(path):
            self.misses += 1
            return None
        try:
            async with aiofiles.open(path, "r", encoding="utf-8") as handle:
                entry = json.loads(await handle.read())
            payload = entry["payload"]
        except (ValueError, KeyError, TypeError) as e:
            self._quarantine(path, str(e))
            self.misses += 1
            return None
        self.hits += 1
        logger.debug(f"缓存命中: {key[:12]}")
        return payload

    async def put(self, key: str, payload: Dict[str, Any], meta: Dict[str, Any] = None):
        entry = {"meta": dict(meta or {}, key=key, stored_at=time.time()), "payload": payload}
        await atomic_write_bytes(self._path(key), canonical_json(entry).encode("utf-8"))

    def _entries(self) -> List[str]:
        if not os.path.isdir(self.root):
            return []
        paths = []
        for bucket in sorted(os.listdir(self.root)):
            if bucket == QUARANTINE_DIR:
                continue
            folder = os.path.join(self.root, bucket)
            if not os.path.isdir(folder):
                continue
            for name in sorted(os.listdir(folder)):
                if name.endswith(".json"):
                    paths.append(os.path.join(folder, name))
        return paths

    def stats(self) -> Dict[str, Any]:
        """按 (码指纹, 区域, ℓ) 列出条目"""
        entries = []
        total = 0
        for path in self._entries():
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    meta = json.load(handle)["meta"]
            except (ValueError, KeyError, TypeError) as e:
                self._quarantine(path, str(e))
                continue
            total += os.path.getsize(path)
            entries.append({
                "key": meta.get("key", os.path.basename(path)[:-5]),
                "kind": meta.get("kind"),
                "code": meta.get("code"),
                "fingerprint": meta.get("fingerprint"),
                "region": meta.get("region"),
                "ell": meta.get("ell"),
            })
        entries.sort(key=lambda e: (str(e["fingerprint"]), str(e["region"]), str(e["ell"]), e["key"]))
        quarantine = os.path.join(self.root, QUARANTINE_DIR)
        quarantined = len(os.listdir(quarantine)) if os.path.isdir(quarantine) else 0
        return {"root": self.root, "count": len(entries), "bytes": total, "quarantined": quarantined,
                "entries": entries}

    def gc(self, max_age_seconds: float = None) -> int:
        """
        删除早于 max_age_seconds 的条目（None 表示全部删除）

        Returns:
            删除的条目数
        """
        now = time.time()
        removed = 0
        for path in self._entries():
            if max_age_seconds is not None and max_age_seconds > 0 and now - os.path.getmtime(path) < max_age_seconds:
                continue
            os.remove(path)
            removed += 1
        for bucket in os.listdir(self.root) if os.path.isdir(self.root) else []:
            folder = os.path.join(self.root, bucket)
            if bucket != QUARANTINE_DIR and os.path.isdir(folder) and not os.listdir(folder):
                os.rmdir(folder)
        logger.info(f"✅ 缓存清理完成: 删除 {removed} 个条目")
        return removed


# 全局缓存实例
cache_service = CacheService()
