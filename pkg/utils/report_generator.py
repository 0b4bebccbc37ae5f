# utils/report_generator.py
"""Report generation module for CSV, JSON-lines and Excel exports."""

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

# Excel
try:
    from openpyxl import Workbook
    from openpyxl.styles import Font, PatternFill
    from openpyxl.utils.dataframe import dataframe_to_rows
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# "


@dataclass
class ReportTable:
    """A loaded table with the provenance stored in its header."""
    frame: pd.DataFrame
    provenance: Dict[str, Any] = field(default_factory=dict)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


class ReportGenerator:
    """
    Writes run reports, tuning results and optimizer benchmarks.

    Every file carries the provenance (schema version, config hash, seed,
    code version): CSV files as leading ``# key: value`` lines, JSON-lines
    files as a first ``header`` record. Nothing time-dependent goes into
    CSV or JSON-lines output so repeated runs produce identical files
    apart from timing columns.
    """

    @staticmethod
    def write_csv(df: pd.DataFrame, path: Union[str, Path], provenance: Optional[Dict[str, Any]] = None) -> Path:
        """Write a table with a provenance comment header."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            for key, value in (provenance or {}).items():
                f.write(f"{HEADER_PREFIX}{key}: {json.dumps(_jsonable(value), sort_keys=True)}\n")
            df.to_csv(f, index=False, lineterminator='\n')
        return path

    @staticmethod
    def write_jsonl(df: pd.DataFrame, path: Union[str, Path], provenance: Optional[Dict[str, Any]] = None,
                    table: str = 'rows') -> Path:
        """Write a table as JSON lines: one header record, then one record per row."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {'record': 'header', 'table': table,
                  **{k: _jsonable(v) for k, v in (provenance or {}).items()}}
        with open(path, 'w', encoding='utf-8') as f:
            f.write(json.dumps(header, sort_keys=True) + "\n")
            for row in df.to_dict(orient='records'):
                f.write(json.dumps({k: _jsonable(v) for k, v in row.items()}) + "\n")
        return path

    @staticmethod
    def load_report(path: Union[str, Path]) -> ReportTable:
        """
        Read a table written by write_csv or write_jsonl.

        Args:
            path: ``.csv`` or ``.jsonl`` file

        Returns:
            ReportTable with the rows and the provenance header
        """
        path = Path(path)
        if path.suffix == '.jsonl':
            provenance: Dict[str, Any] = {}
            rows: List[Dict[str, Any]] = []
            with open(path, 'r', encoding='utf-8') as f:
                for line in f:
                    if not line.strip():
                        continue
                    record = json.loads(line)
                    if record.get('record') == 'header':
                        provenance = {k: v for k, v in record.items() if k not in ('record', 'table')}
                    else:
                        rows.append(record)
            return ReportTable(frame=pd.DataFrame(rows), provenance=provenance)

        provenance = {}
        skip = 0
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                if not line.startswith(HEADER_PREFIX):
                    break
                key, _, value = line[len(HEADER_PREFIX):].rstrip("\n").partition(": ")
                provenance[key] = json.loads(value)
                skip += 1
        return ReportTable(frame=pd.read_csv(path, skiprows=skip), provenance=provenance)

    @staticmethod
    def write_table(df: pd.DataFrame, out_dir: Path, stem: str, formats: Iterable[str],
                     provenance: Optional[Dict[str, Any]]) -> List[Path]:
        written = []
        for fmt in formats:
            if fmt == 'csv':
                written.append(ReportGenerator.write_csv(df, out_dir / f"{stem}.csv", provenance))
            elif fmt == 'jsonl':
                written.append(ReportGenerator.write_jsonl(df, out_dir / f"{stem}.jsonl", provenance, stem))
        return written

    @staticmethod
    def emit_report(report: Any, out_dir: Union[str, Path], formats: Sequence[str] = ('csv',),
                    provenance: Optional[Dict[str, Any]] = None) -> List[Path]:
        """
        Write a RunReport.

        Produces ``summary`` (one row per filter) and ``series`` (filter,
        metric, t, value) in every requested format, ``tracked`` when a bus
        is tracked, ``run.json`` with the diagnostics, and ``summary.xlsx``
        when xlsx is requested.

        Args:
            report: RunReport from run_experiment
            out_dir: Output directory (created if missing)
            formats: Any of csv, jsonl, xlsx
            provenance: Header fields; defaults to the report's own provenance

        Returns:
            Paths written
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        provenance = dict(provenance if provenance is not None else report.provenance)

        written = ReportGenerator.write_table(report.summary_frame(), out_dir, 'summary', formats, provenance)
        written += ReportGenerator.write_table(report.series_frame(), out_dir, 'series', formats, provenance)
        tracked = report.tracked_frame()
        if not tracked.empty:
            written += ReportGenerator.write_table(tracked, out_dir, 'tracked', formats, provenance)

        run_path = out_dir / 'run.json'
        run_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True, default=_jsonable),
                            encoding='utf-8')
        written.append(run_path)

        if 'xlsx' in formats:
            if OPENPYXL_AVAILABLE:
                written.append(ReportGenerator.export_to_excel(
                    {'summary': report.summary_frame(), 'series': report.series_frame()},
                    out_dir / 'summary.xlsx', provenance))
            else:
                logger.warning("openpyxl is not installed; skipping xlsx output")

        logger.info("wrote %d report files to %s", len(written), out_dir)
        return written

    @staticmethod
    def export_to_excel(sheets: Dict[str, pd.DataFrame], output_path: Union[str, Path],
                        provenance: Optional[Dict[str, Any]] = None) -> Path:
        """
        Export tables to an Excel workbook, one sheet each plus a provenance sheet.

        Raises:
            ImportError: openpyxl is not installed
        """
        if not OPENPYXL_AVAILABLE:
            raise ImportError("openpyxl is required for Excel export")

        wb = Workbook()
        header_font = Font(bold=True, color='FFFFFF')
        header_fill = PatternFill(start_color='2196F3', end_color='2196F3', fill_type='solid')

        ws_info = wb.active
        ws_info.title = 'provenance'
        ws_info['A1'] = 'State estimation run'
        ws_info['A1'].font = Font(bold=True, size=14)
        ws_info['A2'] = f'Generated: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}'
        for key, value in (provenance or {}).items():
            ws_info.append([key, json.dumps(_jsonable(value))])

        for title, df in sheets.items():
            ws = wb.create_sheet(title[:31])
            for r_idx, row in enumerate(dataframe_to_rows(df, index=False, header=True)):
                ws.append(row)
                if r_idx == 0:
                    for cell in ws[ws.max_row]:
                        cell.font = header_font
                        cell.fill = header_fill

        for ws in wb.worksheets:
            for column in ws.columns:
                max_length = max((len(str(cell.value)) for cell in column if cell.value is not None), default=0)
                ws.column_dimensions[column[0].column_letter].width = min(max_length + 2, 30)

        output_path = Path(output_path)
        wb.save(output_path)
        return output_path

    @staticmethod
    def write_overlay(overlay: Dict[str, Any], path: Union[str, Path],
                      provenance: Optional[Dict[str, Any]] = None) -> Path:
        """Write a tuning overlay as YAML with the provenance as leading comments."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            for key, value in (provenance or {}).items():
                f.write(f"{HEADER_PREFIX}{key}: {json.dumps(_jsonable(value), sort_keys=True)}\n")
            yaml.safe_dump(overlay, f, sort_keys=False)
        return path

    @staticmethod
    def curve_frame(curve: Sequence[float]) -> pd.DataFrame:
        curve = np.asarray(curve, dtype=float)
        return pd.DataFrame({'iteration': np.arange(1, curve.size + 1), 'best_fitness': curve})

    @staticmethod
    def emit_tuning(result: Any, out_dir: Union[str, Path], formats: Sequence[str] = ('csv',),
                    provenance: Optional[Dict[str, Any]] = None) -> List[Path]:
        """Write ``overlay.yaml`` and the convergence ``curve`` of a TuningResult."""
        out_dir = Path(out_dir)
        written = [ReportGenerator.write_overlay(result.to_overlay(), out_dir / 'overlay.yaml', provenance)]
        written += ReportGenerator.write_table(ReportGenerator.curve_frame(result.curve), out_dir, 'curve',
                                                formats, provenance)
        return written

    @staticmethod
    def emit_benchmark(result: Any, out_dir: Union[str, Path], formats: Sequence[str] = ('csv',),
                       provenance: Optional[Dict[str, Any]] = None) -> List[Path]:
        """Write ``medians``, ``runs`` and ``curves`` of a BenchResult."""
        out_dir = Path(out_dir)
        written = ReportGenerator.write_table(result.medians, out_dir, 'medians', formats, provenance)
        written += ReportGenerator.write_table(result.runs, out_dir, 'runs', formats, provenance)
        written += ReportGenerator.write_table(result.curves, out_dir, 'curves', formats, provenance)
        if 'xlsx' in formats and OPENPYXL_AVAILABLE:
            written.append(ReportGenerator.export_to_excel({'medians': result.medians}, out_dir / 'medians.xlsx',
                                                           provenance))
        return written


def emit_report(report: Any, out_dir: Union[str, Path], formats: Sequence[str] = ('csv',),
                provenance: Optional[Dict[str, Any]] = None) -> List[Path]:
    return ReportGenerator.emit_report(report, out_dir, formats, provenance)


def load_report(path: Union[str, Path]) -> ReportTable:
    return ReportGenerator.load_report(path)
