"""
日志配置
使用 RotatingFileHandler 实现日志自动轮转，控制台与文件双输出
"""
import os
import logging
import logging.config

from models.config import config


def ensure_log_dir(log_dir: str = None) -> str:
    """确保日志目录存在"""
    log_dir = log_dir or config.LOG_DIR
    if not os.path.exists(log_dir):
        os.makedirs(log_dir, exist_ok=True)
    return log_dir


# 日志轮转配置
LOG_MAX_BYTES = config.LOG_MAX_BYTES
LOG_BACKUP_COUNT = config.LOG_BACKUP_COUNT


def build_logconfig_dict(log_dir: str = None, level: int = None) -> dict:
    """
    构建 dictConfig 字典

    Args:
        log_dir: 日志目录，默认取 config.LOG_DIR
        level: 日志级别，默认取 config.LOG_LEVEL

    Returns:
        dict: 可直接传给 logging.config.dictConfig 的配置
    """
    log_dir = ensure_log_dir(log_dir)
    level_name = logging.getLevelName(level if level is not None else config.LOG_LEVEL)
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'generic': {
                'format': '%(asctime)s [%(levelname)s] [PID:%(process)d] %(name)s: %(message)s',
                'datefmt': '[%Y-%m-%d %H:%M:%S %z]',
                'class': 'logging.Formatter'
            },
            'console': {
                'format': '%(asctime)s [%(levelname)s] %(message)s',
                'datefmt': '%H:%M:%S',
                'class': 'logging.Formatter'
            }
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'formatter': 'console',
                'stream': 'ext://sys.stderr'
            },
            'run_file': {
                'class': 'logging.handlers.RotatingFileHandler',
                'formatter': 'generic',
                'filename': os.path.join(log_dir, 'aqec.log'),
                'maxBytes': LOG_MAX_BYTES,
                'backupCount': LOG_BACKUP_COUNT,
                'encoding': 'utf-8'
            }
        },
        'loggers': {
            'aqec': {
                'level': level_name,
                'handlers': ['console', 'run_file'],
                'propagate': False
            }
        },
        'root': {
            'level': level_name,
            'handlers': ['console', 'run_file']
        }
    }


def setup_logging(level: int = None, log_dir: str = None) -> dict:
    """应用日志配置并返回所用字典"""
    logconfig_dict = build_logconfig_dict(log_dir=log_dir, level=level)
    logging.config.dictConfig(logconfig_dict)
    return logconfig_dict
