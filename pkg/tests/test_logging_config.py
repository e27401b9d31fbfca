#!/usr/bin/env python3
"""
测试日志配置
验证 dictConfig 字典结构、RotatingFileHandler 参数与 root logger
"""
import logging
import os
import sys

# 添加父目录到 path
sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from logging_config import LOG_BACKUP_COUNT, LOG_MAX_BYTES, build_logconfig_dict, setup_logging


def test_logconfig_dict_structure(tmp_path):
    """测试日志配置字典结构"""
    logconfig_dict = build_logconfig_dict(log_dir=str(tmp_path))
    assert logconfig_dict['version'] == 1
    assert 'console' in logconfig_dict['handlers']
    assert 'run_file' in logconfig_dict['handlers']
    assert 'root' in logconfig_dict
    assert logconfig_dict['root']['handlers']


def test_rotating_handler_config(tmp_path):
    """测试 RotatingFileHandler 配置"""
    handler = build_logconfig_dict(log_dir=str(tmp_path))['handlers']['run_file']
    assert handler['class'] == 'logging.handlers.RotatingFileHandler'
    assert handler['maxBytes'] == LOG_MAX_BYTES == 10 * 1024 * 1024
    assert handler['backupCount'] == LOG_BACKUP_COUNT == 10
    assert handler['filename'] == os.path.join(str(tmp_path), 'aqec.log')


def test_log_dir_is_created(tmp_path):
    """测试日志目录不存在时自动创建"""
    log_dir = tmp_path / "nested" / "logs"
    build_logconfig_dict(log_dir=str(log_dir))
    assert log_dir.is_dir()


def test_level_override(tmp_path):
    """测试命令行日志级别覆盖默认值"""
    logconfig_dict = build_logconfig_dict(log_dir=str(tmp_path), level=logging.DEBUG)
    assert logconfig_dict['root']['level'] == 'DEBUG'
    assert logconfig_dict['loggers']['aqec']['level'] == 'DEBUG'


def test_root_logger_writes_file(tmp_path):
    """测试应用配置后 root logger 写入轮转文件"""
    setup_logging(logging.INFO, log_dir=str(tmp_path))
    logger = logging.getLogger("services.test")
    logger.warning("⚠️ 日志写入测试")
    for handler in logging.getLogger().handlers:
        handler.flush()
    with open(os.path.join(str(tmp_path), 'aqec.log'), encoding='utf-8') as handle:
        content = handle.read()
    assert "日志写入测试" in content
    assert "services.test" in content
