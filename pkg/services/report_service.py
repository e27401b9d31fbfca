"""
报告输出服务
JSON reports, CSV tables and SVG plots, each written atomically.

JSON uses sorted keys and no timestamps so that identical runs give identical
bytes; SVG output pins matplotlib's hash salt and drops the date metadata for
the same reason.
"""
import csv
import io
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from services.cache_service import atomic_write_bytes  # noqa: E402

logger = logging.getLogger(__name__)


def report_json(payload: Any) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


async def write_json(path: str, payload: Any) -> str:
    await atomic_write_bytes(path, report_json(payload))
    logger.debug(f"报告已写入: {path}")
    return path


def flatten(payload: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """嵌套字典展平为 a.b.c 列；列表以 JSON 字符串保存"""
    out: Dict[str, Any] = {}
    for key in sorted(payload):
        value = payload[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, name + "."))
        elif isinstance(value, (list, tuple)):
            out[name] = json.dumps(value, sort_keys=True, ensure_ascii=False)
        else:
            out[name] = value
    return out


def csv_text(rows: Sequence[Dict[str, Any]]) -> str:
    flat = [flatten(r) for r in rows]
    columns: List[str] = []
    for row in flat:
        for key in row:
            if key not in columns:
                columns.append(key)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in flat:
        writer.writerow(row)
    return buffer.getvalue()


async def write_csv(path: str, rows: Sequence[Dict[str, Any]]) -> str:
    await atomic_write_bytes(path, csv_text(rows).encode("utf-8"))
    return path


def slack_plot_svg(series: Dict[str, Iterable[Sequence[float]]], xlabel: str = "ε", ylabel: str = "slack",
                   title: str = "") -> bytes:
    """
    折线图（SVG）

    Args:
        series: 名称 → [(x, y), ...]
    """
    with plt.rc_context({"svg.hashsalt": "aqec", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            for name in sorted(series):
                points = sorted(series[name])
                if not points:
                    continue
                xs, ys = zip(*points)
                ax.plot(xs, ys, marker="o", label=name)
            ax.axhline(0.0, color="grey", linewidth=0.8, linestyle="--")
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            if series:
                ax.legend(loc="best")
            buffer = io.BytesIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buffer.getvalue()


async def write_svg(path: str, series: Dict[str, Iterable[Sequence[float]]], **kwargs) -> str:
    await atomic_write_bytes(path, slack_plot_svg(series, **kwargs))
    return path


def report_path(out_dir: str, *parts: str) -> str:
    return os.path.join(out_dir, *parts)
