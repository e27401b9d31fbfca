#!/usr/bin/env python3
"""
结果缓存单元测试
Test cache keys, atomic writes, corrupt-entry quarantine, stats and gc
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from services.cache_service import CacheService, atomic_write_bytes, cache_key


class TestCacheKey:
    """缓存键测试套件"""

    def test_key_ignores_region_order(self):
        """测试区域顺序不影响键"""
        budget = {"restarts": 1, "seed": 0}
        assert cache_key("interval", "abc", [2, 0, 1], 1.0, budget) == cache_key("interval", "abc", [0, 1, 2], 1.0,
                                                                                   budget)

    def test_key_depends_on_inputs(self):
        """测试任何输入变化都改变键"""
        budget = {"restarts": 1, "seed": 0}
        base = cache_key("interval", "abc", [0], 1.0, budget)
        assert base != cache_key("interval", "abd", [0], 1.0, budget)
        assert base != cache_key("interval", "abc", [0], 2.0, budget)
        assert base != cache_key("interval", "abc", [0], 1.0, {"restarts": 2, "seed": 0})
        assert base != cache_key("cleaning", "abc", [0], 1.0, budget)
        assert len(base) == 64


class TestCacheService:
    """缓存服务测试套件"""

    @pytest.mark.asyncio
    async def test_put_and_get(self, tmp_path):
        """测试写入后读取"""
        cache = CacheService(str(tmp_path))
        key = cache_key("interval", "abc", [0], 1.0, {})
        assert await cache.get(key) is None
        await cache.put(key, {"delta_upper": 0.25}, {"kind": "interval", "region": [0], "ell": 1.0})
        assert await cache.get(key) == {"delta_upper": 0.25}
        assert (cache.hits, cache.misses) == (1, 1)
        assert os.path.exists(os.path.join(str(tmp_path), key[:2], f"{key}.json"))

    @pytest.mark.asyncio
    async def test_corrupt_entry_is_quarantined(self, tmp_path):
        """测试损坏条目被隔离且按未命中处理"""
        cache = CacheService(str(tmp_path))
        key = cache_key("interval", "abc", [1], 1.0, {})
        path = os.path.join(str(tmp_path), key[:2], f"{key}.json")
        os.makedirs(os.path.dirname(path))
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("{not json")
        assert await cache.get(key) is None
        assert not os.path.exists(path)
        assert cache.stats()["quarantined"] == 1

    @pytest.mark.asyncio
    async def test_atomic_write_leaves_no_temp_file(self, tmp_path):
        """测试原子写入不留下临时文件"""
        path = os.path.join(str(tmp_path), "nested", "report.json")
        await atomic_write_bytes(path, b"{}")
        assert os.listdir(os.path.dirname(path)) == ["report.json"]

    @pytest.mark.asyncio
    async def test_stats_and_gc(self, tmp_path):
        """测试统计与清理"""
        cache = CacheService(str(tmp_path))
        for index in range(3):
            key = cache_key("interval", "abc", [index], 1.0, {})
            await cache.put(key, {"i": index}, {"kind": "interval", "fingerprint": "abc", "region": [index],
                                                "ell": 1.0})
        stats = cache.stats()
        assert stats["count"] == 3
        assert stats["bytes"] > 0
        assert [entry["region"] for entry in stats["entries"]] == [[0], [1], [2]]
        assert cache.gc(3600) == 0
        assert cache.gc() == 3
        assert cache.stats()["count"] == 0

    def test_stats_on_missing_root(self, tmp_path):
        """测试缓存目录不存在"""
        cache = CacheService(str(tmp_path / "missing"))
        assert cache.stats()["count"] == 0
        assert cache.gc() == 0
