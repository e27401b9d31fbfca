"""
bounds 命令
Evaluates the tradeoff sweep, the ℓ = ξ log n profile, the distance-bound
checks, the logical-support size check, the checkerboard entropy chain and the
flexible-logical degeneracy check of an experiment config; writes tables, a JSON
report and a slack plot.
"""
import logging
import os
from datetime import datetime, timezone
from typing import Any, Dict, List

from models.errors import AqecError
from models.reports import BoundEvaluation, ExperimentConfig, RunManifest, TaskRecord
from routes.analyze import EXIT_CONFIG, EXIT_FAILED, EXIT_OK
from services.bounds_service import (
    code_distance_bound_for,
    evaluate_tradeoff,
    flexible_degeneracy_check,
    logical_support_evaluate,
    power_law_distance,
    tradeoff_entropy_chain,
    tradeoff_profile,
)
from services.code_service import code_space, get_code, stabilizer_distance
from services.report_service import write_csv, write_json, write_svg
from utils.helpers import content_hash

logger = logging.getLogger(__name__)


def _slack_series(rows: List[BoundEvaluation]) -> List[tuple]:
    return [(r.epsilon, r.slack) for r in rows if not r.vacuous]


def _has_work(cfg: ExperimentConfig) -> bool:
    return bool(cfg.sweep or cfg.profile is not None or cfg.distance_checks or cfg.logical_support
                or cfg.entropy_chains or cfg.degeneracy_checks)


def _logical_support(cfg: ExperimentConfig) -> List[BoundEvaluation]:
    rows = []
    for spec in cfg.logical_support:
        code = get_code(spec.code)
        d = spec.d if spec.d is not None else stabilizer_distance(code)
        rows.append(logical_support_evaluate(code, d, spec.ell, spec.delta, cfg.c_double_prime))
    return rows


async def cmd_bounds(cfg: ExperimentConfig, command: str = "bounds") -> int:
    """
    bounds 命令

    Returns:
        0 所有非空泛的界均成立；1 存在不成立的界；2 配置错误（含 D < 2 与空扫描）
    """
    started_at = datetime.now(timezone.utc).isoformat()
    if not _has_work(cfg):
        logger.error("❌ 配置错误: 没有 sweep、profile 或任何检查项")
        return EXIT_CONFIG
    try:
        sweep = [evaluate_tradeoff(p.n, p.k, p.d, p.delta, p.ell, p.D, cfg.c, cfg.c_prime) for p in cfg.sweep or []]
        profile: List[BoundEvaluation] = []
        if cfg.profile is not None:
            spec = cfg.profile
            profile = tradeoff_profile(spec.n_values, spec.k, power_law_distance(spec.distance_exponent), spec.a,
                                       spec.xi, spec.D, cfg.c, cfg.c_prime)
        distances = [code_distance_bound_for(get_code(check.code), check.ell, check.delta)
                     for check in cfg.distance_checks]
        supports = _logical_support(cfg)
        chains = [tradeoff_entropy_chain(code_space(get_code(spec.code)), spec.cell_side, spec.gap)
                  for spec in cfg.entropy_chains]
        degeneracy = [flexible_degeneracy_check(code_space(get_code(spec.code)), spec.ell, spec.eps_ell)
                      for spec in cfg.degeneracy_checks]
    except AqecError as e:
        logger.error(f"❌ 配置错误: {str(e)}")
        return EXIT_CONFIG

    out_dir = os.path.join(cfg.out, "bounds")
    payload: Dict[str, Any] = {
        "sweep": [r.to_json_dict() for r in sweep],
        "profile": [r.to_json_dict() for r in profile],
        "distance_checks": [r.to_json_dict() for r in distances],
        "logical_support": [r.to_json_dict() for r in supports],
        "entropy_chains": [r.to_json_dict() for r in chains],
        "degeneracy_checks": [r.to_json_dict() for r in degeneracy],
    }
    await write_json(os.path.join(out_dir, "bounds.json"), payload)
    tables = {
        "tradeoff.csv": payload["sweep"],
        "profile.csv": payload["profile"],
        "distance.csv": payload["distance_checks"],
        "logical_support.csv": payload["logical_support"],
        "entropy_chain.csv": payload["entropy_chains"],
        "degeneracy.csv": payload["degeneracy_checks"],
    }
    for name, rows in tables.items():
        if rows:
            await write_csv(os.path.join(out_dir, name), rows)
    series = {"sweep": _slack_series(sweep), "profile": _slack_series(profile)}
    await write_svg(os.path.join(out_dir, "slack.svg"), {k: v for k, v in series.items() if v},
                    xlabel="ε = nδ/d", ylabel="rhs - lhs", title="tradeoff slack")

    failing = [f"sweep[{i}]" for i, r in enumerate(sweep) if not r.satisfied]
    failing += [f"profile[n={r.n}]" for r in profile if not r.satisfied]
    failing += [f"distance[{r.code}]" for r in distances if r.passed is False]
    failing += [f"logical_support[{i}]" for i, r in enumerate(supports) if not r.satisfied]
    failing += [f"entropy_chain[{r.code}]" for r in chains if not r.passed]
    failing += [f"degeneracy[{r.code}, ℓ={r.ell}]" for r in degeneracy if not r.passed]
    vacuous = sum(r.vacuous for r in sweep + profile)
    manifest = RunManifest(
        command=command,
        config_hash=content_hash(cfg.model_dump(mode="json")),
        seed=cfg.seed,
        started_at=started_at,
        tasks=[TaskRecord(key="bounds", status="computed", report_path=os.path.join(out_dir, "bounds.json"))],
        failures=failing,
    )
    await write_json(os.path.join(cfg.out, "manifest.json"), manifest.model_dump(mode="json"))
    logger.info(f"bounds: {len(sweep)} 个扫描点, {len(profile)} 个 profile 点 ({vacuous} 个空泛), "
                f"{len(distances)} 个距离检查, {len(supports)} 个逻辑支撑检查, "
                f"{len(chains)} 条熵链, {len(degeneracy)} 个简并度检查")
    if failing:
        for item in failing:
            logger.error(f"❌ 界不成立: {item}")
        return EXIT_FAILED
    logger.info("✅ bounds 完成")
    return EXIT_OK
