"""
Routes package
CLI command handlers
"""
from . import analyze, bounds, cache

__all__ = ['analyze', 'bounds', 'cache']
