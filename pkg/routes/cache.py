"""
cache 命令
"""
import logging

from routes.analyze import EXIT_CONFIG, EXIT_OK
from services.cache_service import CacheService
from services.report_service import report_json

logger = logging.getLogger(__name__)


def cmd_cache(action: str, max_age: float = None, cache: CacheService = None) -> int:
    """
    cache stats | gc

    stats prints the entries as JSON on stdout; gc removes entries older than
    max_age seconds (all entries when max_age is None or 0).
    """
    cache = cache or CacheService()
    if action == "stats":
        print(report_json(cache.stats()).decode("utf-8"), end="")
        return EXIT_OK
    if action == "gc":
        removed = cache.gc(max_age)
        print(f"removed {removed}")
        return EXIT_OK
    logger.error(f"❌ 未知的 cache 子命令: {action}")
    return EXIT_CONFIG
