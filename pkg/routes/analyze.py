"""
analyze 命令
Runs the correctability suite for every (region, ℓ) pair of an experiment
config and writes one JSON report per pair plus a CSV summary.
"""
import itertools
import logging
import os
from datetime import datetime, timezone
from typing import Any, Dict, List, Tuple

from models.codes import CodeSpace
from models.config import config
from models.errors import AqecError, ConfigError
from models.lattice import Region
from models.reports import ExperimentConfig, RunManifest, TaskRecord
from services.bounds_service import equivalence_suite
from services.cache_service import CacheService, cache_key
from services.cleaning_service import converse_cleaning, verify_cleaning
from services.code_service import brickwork_circuit, code_space, get_code, perturb
from services.correctability_service import delta_ell_interval, verify_decoupling_sandwich
from services.report_service import report_path, write_csv, write_json
from services.search_service import SearchBudget
from services.task_runner import Task, run_coroutines, run_tasks
from utils.helpers import content_hash, derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def build_space(cfg: ExperimentConfig) -> CodeSpace:
    """按配置构造（可能带微扰的）码空间"""
    if not cfg.code:
        raise ConfigError("配置缺少 code")
    try:
        code = get_code(cfg.code)
    except AqecError as e:
        raise ConfigError(str(e)) from e
    space = code_space(code)
    spec = cfg.perturbation
    if spec is not None and spec.epsilon > 0 and spec.depth > 0:
        circuit = brickwork_circuit(code, spec.epsilon, spec.depth, spec.family,
                                    seed=derive_seed(cfg.seed, "circuit") % (2 ** 32))
        space = perturb(space, circuit)
        logger.info(f"微扰线路: {len(circuit.gates)} 个 {spec.family} 门, ε = {spec.epsilon}")
    return space


def expand_regions(space: CodeSpace, specs: List[Any]) -> List[Tuple[int, ...]]:
    """
    区域说明 → 量子比特元组列表

    "singles" and "pairs" expand to every one- and two-qubit region; a list of
    integers names qubits, a list of coordinate lists names lattice sites.
    """
    code = space.code
    out: List[Tuple[int, ...]] = []
    try:
        for spec in specs:
            if spec == "singles":
                out.extend((q,) for q in range(code.n))
            elif spec == "pairs":
                out.extend(itertools.combinations(range(code.n), 2))
            elif isinstance(spec, list) and spec and all(isinstance(s, list) for s in spec):
                out.append(code.qubits_in(Region.from_literal(code.lattice, spec)))
            elif isinstance(spec, list):
                out.append(code.qubits_in(spec))
            else:
                raise ConfigError(f"无法解析的区域: {spec!r}")
    except AqecError as e:
        raise ConfigError(f"区域解析失败: {e}") from e
    if not out:
        raise ConfigError("配置没有给出任何区域")
    unique = []
    for qubits in out:
        if qubits not in unique:
            unique.append(qubits)
    return unique


def analyze_region(space: CodeSpace, qubits: Tuple[int, ...], ell: float, budget: SearchBudget) -> Dict[str, Any]:
    """单个 (A, ℓ) 的完整检验；返回可 JSON 化的报告"""
    interval = delta_ell_interval(space, qubits, ell, budget)
    sandwich = verify_decoupling_sandwich(space, qubits, ell, budget, interval)
    cleaning = verify_cleaning(space, qubits, ell, budget=budget, interval=interval)
    converse = converse_cleaning(space, qubits, budget=budget)
    equivalence = None
    if not space.is_perturbed and space.n <= config.DENSE_QUBIT_LIMIT and len(qubits) <= config.KL_REGION_LIMIT:
        equivalence = equivalence_suite(space.code, qubits, ell, budget)

    if equivalence is not None:
        if equivalence.all_pass:
            status = "correctable"
        elif equivalence.agree:
            status = "uncorrectable (consistent)"
        else:
            status = "inconsistent"
    else:
        status = "exact" if interval.exact else "approximate"
    passed = (
        sandwich.passed
        and all(c.passed for c in cleaning)
        and converse.passed
        and (equivalence is None or equivalence.agree)
    )
    return {
        "report_version": config.REPORT_VERSION,
        "code": space.code.name,
        "fingerprint": space.fingerprint(),
        "region": list(qubits),
        "ell": float(ell),
        "status": status,
        "passed": passed,
        "interval": interval.to_json_dict(),
        "sandwich": sandwich.to_json_dict(),
        "cleaning": [c.to_json_dict() for c in cleaning],
        "converse_cleaning": converse.to_json_dict(),
        "equivalence": equivalence.to_json_dict() if equivalence is not None else None,
    }


def _report_name(qubits: Tuple[int, ...], ell: float) -> str:
    region = "-".join(str(q) for q in qubits) or "empty"
    return f"A{region}_ell{ell:g}.json"


def summary_row(report: Dict[str, Any]) -> Dict[str, Any]:
    interval = report["interval"]
    return {
        "code": report["code"],
        "region": report["region"],
        "ell": report["ell"],
        "status": report["status"],
        "passed": report["passed"],
        "delta_lower": interval["delta_lower"],
        "delta_upper": interval["delta_upper"],
        "mu": interval["mu"],
        "converse_epsilon": report["converse_cleaning"]["epsilon"],
    }


async def cmd_analyze(cfg: ExperimentConfig, jobs: int = None, cache: CacheService = None,
                      command: str = "analyze") -> int:
    """
    analyze 命令

    Returns:
        0 全部通过；1 存在失败的检验或任务；2 配置错误
    """
    started_at = datetime.now(timezone.utc).isoformat()
    try:
        space = build_space(cfg)
        regions = expand_regions(space, cfg.regions)
    except ConfigError as e:
        logger.error(f"❌ 配置错误: {str(e)}")
        return EXIT_CONFIG
    cache = cache or CacheService()
    budget = SearchBudget(cfg.budget.restarts, cfg.budget.max_iterations, cfg.budget.tolerance, cfg.seed)
    fingerprint = space.fingerprint()
    out_dir = report_path(cfg.out, "analyze", space.code.name)

    pending: List[Task] = []
    reports: Dict[str, Dict[str, Any]] = {}
    records: Dict[str, TaskRecord] = {}
    keys: Dict[str, str] = {}
    for qubits, ell in itertools.product(regions, cfg.ells):
        name = _report_name(qubits, ell)
        key = cache_key("analyze", fingerprint, list(qubits), float(ell), budget.to_dict())
        keys[name] = key
        cached = await cache.get(key)
        if cached is not None:
            reports[name] = cached
            records[name] = TaskRecord(key=name, status="cached", cache_hit=True)
        else:
            pending.append(Task(name, analyze_region, (space, qubits, ell, budget)))

    logger.info(f"analyze: {space.code.name}, {len(regions)} 个区域 x {len(cfg.ells)} 个 ℓ，"
                f"{len(pending)} 个待计算，{len(reports)} 个缓存命中")
    failures: List[str] = []
    for outcome in await run_tasks(pending, jobs):
        if not outcome.ok:
            failures.append(f"{outcome.key}: {outcome.error}")
            records[outcome.key] = TaskRecord(key=outcome.key, status="error", wall_seconds=outcome.wall_seconds)
            continue
        reports[outcome.key] = outcome.result
        records[outcome.key] = TaskRecord(key=outcome.key, status="computed", wall_seconds=outcome.wall_seconds)
        qubits, ell = outcome.result["region"], outcome.result["ell"]
        await cache.put(keys[outcome.key], outcome.result,
                        {"kind": "analyze", "code": space.code.name, "fingerprint": fingerprint,
                         "region": qubits, "ell": ell})

    writers = {}
    for name in sorted(reports):
        path = os.path.join(out_dir, name)
        records[name].report_path = path
        writers[name] = (lambda p=path, r=reports[name]: write_json(p, r))
    await run_coroutines(writers, jobs)
    ordered = [reports[name] for name in sorted(reports)]
    await write_csv(os.path.join(out_dir, "summary.csv"), [summary_row(r) for r in ordered])

    failing = [records[name].report_path for name in sorted(reports) if not reports[name]["passed"]]
    manifest = RunManifest(
        command=command,
        config_hash=content_hash(cfg.model_dump(mode="json")),
        seed=cfg.seed,
        started_at=started_at,
        tasks=[records[name] for name in sorted(records)],
        failures=failures + [f"检验失败: {p}" for p in failing],
    )
    await write_json(os.path.join(cfg.out, "manifest.json"), manifest.model_dump(mode="json"))

    for report in ordered:
        marker = "✅" if report["passed"] else "❌"
        logger.info(f"{marker} A={report['region']} ℓ={report['ell']}: {report['status']}, "
                    f"δ ∈ [{report['interval']['delta_lower']:.3e}, {report['interval']['delta_upper']:.3e}]")
    if failures or failing:
        for line in failures:
            logger.error(f"❌ 任务失败 {line}")
        for path in failing:
            print(f"FAILED {path}")
        return EXIT_FAILED
    logger.info(f"✅ analyze 完成: {len(ordered)} 份报告，缓存命中率 {manifest.cache_hit_ratio:.0%}")
    return EXIT_OK
