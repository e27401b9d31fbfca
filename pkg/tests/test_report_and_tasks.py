#!/usr/bin/env python3
"""
报告输出与并行任务单元测试
Test deterministic JSON/CSV/SVG output and the bounded task runner
"""

import asyncio
import json
import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from services.report_service import (
    csv_text,
    flatten,
    report_json,
    report_path,
    slack_plot_svg,
    write_csv,
    write_json,
    write_svg,
)
from services.task_runner import Task, run_coroutines, run_tasks


def slow_square(x: int, delay: float = 0.0) -> int:
    time.sleep(delay)
    return x * x


def explode():
    raise RuntimeError("boom")


class TestReports:
    """报告输出测试套件"""

    def test_json_is_canonical(self):
        """测试键顺序不影响输出字节"""
        a = report_json({"b": 1, "a": {"y": 2, "x": 1}})
        b = report_json({"a": {"x": 1, "y": 2}, "b": 1})
        assert a == b
        assert a.endswith(b"\n")
        assert json.loads(a) == {"a": {"x": 1, "y": 2}, "b": 1}

    def test_flatten(self):
        """测试嵌套字典展平"""
        flat = flatten({"interval": {"lower": 0.1, "upper": 0.2}, "region": [0, 1], "code": "toric"})
        assert flat == {"code": "toric", "interval.lower": 0.1, "interval.upper": 0.2, "region": "[0, 1]"}

    def test_csv_union_of_columns(self):
        """测试各行字段不同时取并集"""
        text = csv_text([{"a": 1}, {"a": 2, "b": {"c": 3}}])
        assert text.splitlines() == ["a,b.c", "1,", "2,3"]

    def test_svg_is_deterministic(self):
        """测试相同数据得到相同 SVG"""
        series = {"toric": [(0.1, 0.5), (0.0, 1.0)], "five": [(0.0, 0.2)]}
        first = slack_plot_svg(series, title="slack")
        second = slack_plot_svg(series, title="slack")
        assert first == second
        assert first.lstrip().startswith(b"<?xml")

    @pytest.mark.asyncio
    async def test_writers(self, tmp_path):
        """测试异步写入三种格式"""
        out = str(tmp_path)
        json_path = await write_json(report_path(out, "run", "report.json"), {"ok": True})
        csv_path = await write_csv(report_path(out, "run", "rows.csv"), [{"x": 1}])
        svg_path = await write_svg(report_path(out, "run", "slack.svg"), {"a": [(0.0, 1.0)]})
        with open(json_path, "rb") as handle:
            assert handle.read() == report_json({"ok": True})
        with open(csv_path, encoding="utf-8") as handle:
            assert handle.read() == "x\n1\n"
        assert os.path.getsize(svg_path) > 0


class TestTaskRunner:
    """并行任务测试套件"""

    @pytest.mark.asyncio
    async def test_results_sorted_by_key(self):
        """测试结果按 key 排序而与完成顺序无关"""
        tasks = [Task("b", slow_square, (3,), {"delay": 0.05}), Task("a", slow_square, (2,)), Task("c", slow_square, (4,))]
        outcomes = await run_tasks(tasks, jobs=3)
        assert [o.key for o in outcomes] == ["a", "b", "c"]
        assert [o.result for o in outcomes] == [4, 9, 16]
        assert all(o.ok for o in outcomes)
        assert all(o.wall_seconds >= 0 for o in outcomes)

    @pytest.mark.asyncio
    async def test_errors_are_captured(self):
        """测试单个任务失败不影响其他任务"""
        outcomes = await run_tasks([Task("bad", explode), Task("good", slow_square, (5,))], jobs=1)
        bad, good = outcomes
        assert not bad.ok
        assert isinstance(bad.error, RuntimeError)
        assert good.result == 25

    @pytest.mark.asyncio
    async def test_duplicate_keys(self):
        """测试重复的 key"""
        with pytest.raises(ValueError):
            await run_tasks([Task("x", slow_square, (1,)), Task("x", slow_square, (2,))])

    @pytest.mark.asyncio
    async def test_run_coroutines(self):
        """测试协程工厂按 key 返回"""
        async def value(x):
            await asyncio.sleep(0)
            return x

        results = await run_coroutines({"z": lambda: value(1), "a": lambda: value(2)}, jobs=1)
        assert list(results) == ["a", "z"]
        assert results == {"a": 2, "z": 1}
