"""
CSV and JSON table writers

Every table starts with '#' metadata lines (package version, command,
config hash and a config echo) and carries no timestamps, so identical
inputs give byte-identical files.
"""

import csv
import io
import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .models import OutputFormat

FLOAT_FORMAT = '.12e'


def format_value(value: Any, float_format: str = FLOAT_FORMAT) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return format(value, float_format)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        # JSON has no NaN/inf literal
        return None
    return value


class Table:
    """A fixed-schema result table plus its metadata and summary lines"""

    def __init__(
        self,
        command: str,
        columns: Sequence[str],
        rows: Sequence[Dict[str, Any]],
        config_hash: str,
        config: Optional[Dict[str, Any]] = None,
        summary: Optional[List[Dict[str, Any]]] = None
    ):
        self.command = command
        self.columns = list(columns)
        self.rows = list(rows)
        self.config_hash = config_hash
        self.config = config or {}
        self.summary = summary or []

    def header_lines(self) -> List[str]:
        return [
            f"# fluxtrade {__version__}",
            f"# command: {self.command}",
            f"# config_hash: {self.config_hash}",
            f"# config: {json.dumps(self.config, sort_keys=True, default=str)}",
        ]

    def to_csv(self, float_format: str = FLOAT_FORMAT) -> str:
        buffer = io.StringIO()
        for line in self.header_lines():
            buffer.write(line + '\n')
        for entry in self.summary:
            fields = ' '.join(f"{k}={format_value(v, float_format)}" for k, v in entry.items())
            buffer.write(f"# {fields}\n")
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(row.get(c), float_format) for c in self.columns])
        return buffer.getvalue()

    def to_json(self) -> str:
        document = {
            'fluxtrade': __version__,
            'command': self.command,
            'config_hash': self.config_hash,
            'config': self.config,
            'summary': [{k: _json_value(v) for k, v in entry.items()} for entry in self.summary],
            'columns': self.columns,
            'rows': [{c: _json_value(row.get(c)) for c in self.columns} for row in self.rows],
        }
        return json.dumps(document, indent=2, sort_keys=False, default=str) + '\n'

    def render(self, fmt: OutputFormat, float_format: str = FLOAT_FORMAT) -> str:
        if fmt is OutputFormat.JSON:
            return self.to_json()
        return self.to_csv(float_format)


def read_csv(text: str) -> Dict[str, Any]:
    """Parse a table written by Table.to_csv into metadata and string rows"""
    metadata: Dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith('#'):
            content = line[1:].strip()
            if ': ' in content:
                key, value = content.split(': ', 1)
                metadata.setdefault(key, value)
        elif line:
            body.append(line)
    reader = csv.DictReader(body)
    return {'metadata': metadata, 'rows': list(reader), 'columns': reader.fieldnames or []}


def write_table(table: Table, path: Optional[str], fmt: OutputFormat, stream=None,
                float_format: str = FLOAT_FORMAT) -> str:
    """Write to path (or stream when path is None) and return the rendered text"""
    text = table.render(fmt, float_format)
    if path:
        with open(path, 'w', newline='') as f:
            f.write(text)
    elif stream is not None:
        stream.write(text)
    return text
