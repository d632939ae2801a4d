"""
Command-line input parsing and output writing: p grids, loss files,
estimator tables, CSV curves, JSON documents and run manifests.
"""
import csv
import json
import math
import os
import platform
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Tuple

import numpy as np
import scipy
from django.utils import timezone

from .conf import setting
from .exceptions import DomainError, LossFileError
from .finite_risk import EstimatorSpec, RiskCurve
from .loss_model import BUILTIN_LOSSES, LossSpec, builtin
from .serializers import LossFileSerializer

CSV_HEADER = ['p', 'eta', 'bound_kind', 'error_bound']

_LOGSPACE = re.compile(r'^logspace:([^:]+):([^:]+):(\d+)$')
_R_RANGE = re.compile(r'^\s*(\d+)\s*\.\.\s*(\d+)\s*$')


def parse_p_grid(spec: str) -> List[float]:
    """ "0.5,0.1,0.01" or "logspace:1e-4:0.5:20" """
    spec = spec.strip()
    match = _LOGSPACE.match(spec)
    try:
        if match:
            lo, hi, count = float(match.group(1)), float(match.group(2)), int(match.group(3))
            if count < 1 or not 0 < lo <= hi:
                raise DomainError(f"bad logspace grid '{spec}'")
            grid = [float(v) for v in np.geomspace(lo, hi, count)]
        else:
            grid = list(dict.fromkeys(float(v) for v in spec.split(',') if v.strip()))
    except ValueError as exc:
        raise DomainError(f"cannot parse p grid '{spec}': {exc}") from exc
    if not grid:
        raise DomainError("empty p grid")
    bad = [p for p in grid if not 0 < p < 1]
    if bad:
        raise DomainError(f"p values must lie in (0, 1), got {bad}")
    return grid


def parse_r_range(spec: str) -> List[int]:
    """ "A..B" inclusive, or a single integer. """
    match = _R_RANGE.match(spec)
    if match:
        first, last = int(match.group(1)), int(match.group(2))
        if first > last:
            raise DomainError(f"empty r range '{spec}'")
        return list(range(first, last + 1))
    try:
        return [int(spec)]
    except ValueError:
        raise DomainError(f"cannot parse r range '{spec}', expected A..B")


def load_loss(source: str, params: Optional[str] = None) -> LossSpec:
    """A built-in loss name (with optional JSON parameters) or a LossFileSchema file."""
    extra: Dict[str, Any] = {}
    if params:
        try:
            extra = json.loads(params)
        except json.JSONDecodeError as exc:
            raise LossFileError(f"--loss-params is not valid JSON: {exc}") from exc
        if not isinstance(extra, dict):
            raise LossFileError("--loss-params must be a JSON object")

    if source in BUILTIN_LOSSES:
        return builtin(source, **extra)

    path = Path(source)
    if not path.is_file():
        raise LossFileError(f"'{source}' is neither a built-in loss {sorted(BUILTIN_LOSSES)} nor a file")
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LossFileError(f"cannot read loss file {source}: {exc}") from exc
    return loss_from_dict(data)


def loss_from_dict(data: Any) -> LossSpec:
    serializer = LossFileSerializer(data=data)
    if not serializer.is_valid():
        raise LossFileError('invalid loss description', errors=serializer.errors)
    return serializer.validated_data['loss']


def load_table(path: str) -> Tuple[float, ...]:
    """Estimator values g(r), g(r+1), ... from a JSON list or one number per line."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise LossFileError(f"cannot read estimator table {path}: {exc}") from exc
    try:
        values = json.loads(text)
        if not isinstance(values, list):
            raise ValueError('expected a JSON list')
    except ValueError:
        values = [line for line in text.split() if line.strip()]
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise LossFileError(f"estimator table {path} holds non-numeric values") from exc


def parse_estimator(form: str, omega: Optional[float], c: Optional[int],
                    table: Optional[str] = None) -> EstimatorSpec:
    if form.replace(' ', '') not in ('omega/(n+c)', 'table'):
        raise DomainError(f"unknown estimator form '{form}', expected omega/(n+c)")
    if omega is None:
        raise DomainError('--omega is required for the estimator')
    values = load_table(table) if table else ()
    return EstimatorSpec(float(omega), int(c or 0), values)


def format_float(value: float) -> str:
    if value is None:
        return ''
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return format(value, '.17g')


def write_curve_csv(curve: RiskCurve, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for rec in curve.records:
        writer.writerow([format_float(rec.p), format_float(rec.eta), rec.bound_kind, format_float(rec.error_bound)])


def read_curve_csv(stream: TextIO) -> List[Dict[str, Any]]:
    reader = csv.DictReader(stream)
    if reader.fieldnames != CSV_HEADER:
        raise DomainError(f"unexpected CSV header {reader.fieldnames}")
    return [
        {'p': float(row['p']), 'eta': float(row['eta']), 'bound_kind': row['bound_kind'],
         'error_bound': float(row['error_bound'])}
        for row in reader
    ]


def jsonable(value: Any) -> Any:
    """Replace non-finite floats (not representable in JSON) and numpy scalars."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def dump_json(data: Any) -> str:
    return json.dumps(jsonable(data), indent=2, sort_keys=True)


def build_manifest(command: str, params: Dict[str, Any], seeds: Iterable[int] = (),
                   started_at=None) -> Dict[str, Any]:
    return {
        'command': command,
        'params': jsonable(params),
        'tool_version': setting('RISK_TOOL_VERSION', 'unknown'),
        'seeds': list(seeds),
        'started_at': (started_at or timezone.now()).isoformat(),
        'finished_at': timezone.now().isoformat(),
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
    }


def manifest_path(out: str) -> str:
    return f"{out}.manifest.json"


def write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='\n', encoding='utf-8') as handle:
        handle.write(text)
