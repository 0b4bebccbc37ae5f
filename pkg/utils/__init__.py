# utils/__init__.py
"""Utility functions and helpers."""

from .report_generator import ReportGenerator, ReportTable, emit_report, load_report

__all__ = [
    'ReportGenerator',
    'ReportTable',
    'emit_report',
    'load_report',
]
