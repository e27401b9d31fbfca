#!/usr/bin/env python3
"""
命令行端到端测试
Test the analyze / bounds / cache commands: exit codes, reproducible reports
and cache hits
"""

import glob
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from aqec import build_parser, main
from models.config import config

SMALL_BUDGET = {"restarts": 1, "max_iterations": 15}


@pytest.fixture(autouse=True)
def isolated_logs(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "LOG_DIR", str(tmp_path / "logs"))


@pytest.fixture
def workspace(tmp_path):
    def write_config(payload: dict) -> str:
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    out = str(tmp_path / "out")
    cache = str(tmp_path / "cache")
    return write_config, out, cache


def read(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


class TestParser:
    """参数解析测试套件"""

    def test_global_flags_before_and_after_command(self):
        """测试全局参数写在子命令前后都有效"""
        parser = build_parser()
        before = parser.parse_args(["--seed", "3", "analyze", "--config", "x.json"])
        after = parser.parse_args(["analyze", "--config", "x.json", "--seed", "4"])
        assert before.seed == 3
        assert after.seed == 4
        assert parser.parse_args(["cache", "stats"]).seed is None

    def test_help_and_usage_errors(self):
        """测试 --help 与缺少子命令"""
        assert main(["--help"]) == 0
        assert main([]) == 2
        assert main(["cache", "purge"]) == 2


class TestAnalyze:
    """analyze 命令测试套件"""

    def test_correctable_region(self, workspace):
        """测试五比特码单比特区域全部通过"""
        write_config, out, cache = workspace
        path = write_config({"code": "five-qubit", "regions": [[0]], "ells": [4.0], "budget": SMALL_BUDGET})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        (report_file,) = glob.glob(os.path.join(out, "analyze", "*", "A0_ell4.json"))
        report = json.loads(read(report_file))
        assert report["status"] == "correctable"
        assert report["passed"]
        assert report["interval"]["delta_upper"] < 1e-6
        assert glob.glob(os.path.join(out, "analyze", "*", "summary.csv"))
        assert os.path.exists(os.path.join(out, "manifest.json"))

    def test_uncorrectable_region_is_consistent(self, workspace):
        """测试支撑逻辑算符的区域判为一致的不可纠错"""
        write_config, out, cache = workspace
        path = write_config({"code": "toric-2x2", "regions": [[0, 1]], "ells": [1.0], "budget": SMALL_BUDGET})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        (report_file,) = glob.glob(os.path.join(out, "analyze", "*", "A0-1_ell1.json"))
        report = json.loads(read(report_file))
        assert report["status"] == "uncorrectable (consistent)"
        assert report["interval"]["delta_lower"] > 0.25

    def test_rerun_is_reproducible_and_cached(self, workspace):
        """测试重复运行报告逐字节一致且命中缓存"""
        write_config, out, cache = workspace
        path = write_config({"code": "five-qubit", "regions": [[0], [1, 2]], "ells": [1.0],
                             "budget": SMALL_BUDGET, "seed": 9})
        args = ["analyze", "--config", path, "--out", out, "--cache-dir", cache]
        assert main(args) in (0, 1)
        reports = sorted(glob.glob(os.path.join(out, "analyze", "*", "*.json")))
        first = [read(p) for p in reports]
        main(args)
        assert [read(p) for p in reports] == first
        manifest = json.loads(read(os.path.join(out, "manifest.json")))
        assert all(task["cache_hit"] for task in manifest["tasks"])

    def test_bad_region(self, workspace):
        """测试越界的量子比特"""
        write_config, out, cache = workspace
        path = write_config({"code": "five-qubit", "regions": [[9]], "budget": SMALL_BUDGET})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 2

    def test_unknown_region_keyword(self, workspace):
        """测试未知的区域关键字"""
        write_config, out, cache = workspace
        path = write_config({"code": "five-qubit", "regions": ["triples"]})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 2

    def test_missing_config(self, tmp_path):
        """测试配置文件不存在"""
        assert main(["analyze", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_code(self, workspace):
        """测试未知的码"""
        write_config, out, cache = workspace
        path = write_config({"code": "no-such-code", "regions": [[0]]})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 2


class TestBounds:
    """bounds 命令测试套件"""

    def test_sweep_profile_and_distance(self, workspace):
        """测试扫描、profile 与距离检查都成立"""
        write_config, out, cache = workspace
        path = write_config({
            "c": 1.0,
            "c_prime": 1.0,
            "sweep": [{"n": 8, "k": 2, "d": 2, "delta": 0.0, "ell": 1.0, "D": 2},
                      {"n": 10, "k": 1, "d": 1, "delta": 0.5, "ell": 1.0, "D": 2}],
            "profile": {"n_values": [16, 64, 256], "k": 1},
            "distance_checks": [{"code": "repetition-4", "ell": 1.0}],
        })
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        payload = json.loads(read(os.path.join(out, "bounds", "bounds.json")))
        assert len(payload["sweep"]) == 2
        assert payload["sweep"][1]["vacuous"]
        assert [row["kind"] for row in payload["profile"]] == ["profile"] * 3
        assert payload["distance_checks"][0]["passed"]
        for name in ("tradeoff.csv", "profile.csv", "distance.csv", "slack.svg"):
            assert os.path.exists(os.path.join(out, "bounds", name))

    def test_support_chain_and_degeneracy(self, workspace):
        """测试逻辑支撑、熵链与简并度检查写入报告，且使用配置中的 c''"""
        write_config, out, cache = workspace
        path = write_config({
            "c_double_prime": 3.0,
            "logical_support": [{"code": "toric-3x3", "d": 3, "ell": 1.0}],
            "entropy_chains": [{"code": "toric-2x2", "cell_side": 1, "gap": 1}],
            "degeneracy_checks": [{"code": "toric-2x2", "ell": 0.9, "eps_ell": 0.01}],
        })
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        payload = json.loads(read(os.path.join(out, "bounds", "bounds.json")))
        assert payload["sweep"] == [] and payload["profile"] == []
        support = payload["logical_support"][0]
        assert support["kind"] == "logical_support"
        assert support["rhs"] == pytest.approx(3.0 * 18)
        assert support["satisfied"]
        assert payload["entropy_chains"][0]["passed"]
        assert payload["degeneracy_checks"][0]["status"] == "certified"
        for name in ("logical_support.csv", "entropy_chain.csv", "degeneracy.csv"):
            assert os.path.exists(os.path.join(out, "bounds", name))
        assert not os.path.exists(os.path.join(out, "bounds", "tradeoff.csv"))

    def test_refused_degeneracy_is_not_a_failure(self, workspace):
        """测试拒绝认证的简并度检查不算界不成立"""
        write_config, out, cache = workspace
        path = write_config({"degeneracy_checks": [{"code": "toric-2x2", "ell": 0.5, "eps_ell": 0.01}]})
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        payload = json.loads(read(os.path.join(out, "bounds", "bounds.json")))
        assert payload["degeneracy_checks"][0]["status"] == "refused"

    def test_violated_bound(self, workspace):
        """测试不成立的界返回 1"""
        write_config, out, cache = workspace
        path = write_config({"c_prime": 1.0, "sweep": [{"n": 1, "k": 1, "d": 100, "ell": 1.0, "D": 2}]})
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 1

    def test_dimension_one(self, workspace):
        """测试 D = 1 为配置错误"""
        write_config, out, cache = workspace
        path = write_config({"sweep": [{"n": 8, "k": 1, "d": 2, "ell": 1.0, "D": 1}]})
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 2

    def test_empty_sweep(self, workspace):
        """测试空扫描且无 profile"""
        write_config, out, cache = workspace
        path = write_config({"sweep": []})
        assert main(["bounds", "--config", path, "--out", out, "--cache-dir", cache]) == 2

    def test_svg_is_reproducible(self, workspace):
        """测试重复运行图像一致"""
        write_config, out, cache = workspace
        path = write_config({"profile": {"n_values": [16, 64], "k": 1}})
        args = ["bounds", "--config", path, "--out", out, "--cache-dir", cache]
        assert main(args) == 0
        first = read(os.path.join(out, "bounds", "slack.svg"))
        assert main(args) == 0
        assert read(os.path.join(out, "bounds", "slack.svg")) == first


class TestCacheCommand:
    """cache 命令测试套件"""

    def test_stats_and_gc(self, workspace, capsys):
        """测试统计输出与清理"""
        write_config, out, cache = workspace
        path = write_config({"code": "five-qubit", "regions": [[0]], "ells": [4.0], "budget": SMALL_BUDGET})
        assert main(["analyze", "--config", path, "--out", out, "--cache-dir", cache]) == 0
        capsys.readouterr()
        assert main(["cache", "stats", "--cache-dir", cache]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["count"] == 1
        assert stats["entries"][0]["region"] == [0]
        assert main(["cache", "gc", "--max-age", "0", "--cache-dir", cache]) == 0
        assert "removed 1" in capsys.readouterr().out
