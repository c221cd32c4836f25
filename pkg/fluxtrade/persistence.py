"""
Result store for fluxtrade
"""

import json
import sqlite3
from typing import Any, Dict, List, Sequence

from . import __version__
from .models import SweepRecord


class ResultStore:
    """SQLite cache of finished runs keyed by config hash"""

    def __init__(self, db_path: str = "fluxtrade.db"):
        self.db_path = db_path
        self.conn = None
        self._init_db()

    def _init_db(self):
        """Initialize database schema"""
        self.conn = sqlite3.connect(self.db_path)
        self.conn.row_factory = sqlite3.Row

        cursor = self.conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                config_hash TEXT PRIMARY KEY,
                command TEXT,
                spec_json TEXT,
                version TEXT,
                n_records INTEGER
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS records (
                config_hash TEXT,
                row_index INTEGER,
                payload TEXT,
                PRIMARY KEY(config_hash, row_index),
                FOREIGN KEY(config_hash) REFERENCES runs(config_hash)
            )
        """)

        self.conn.commit()

    def save_run(
        self,
        command: str,
        config_hash: str,
        spec: Dict[str, Any],
        rows: Sequence[Any]
    ):
        """Store a run's rows; a rerun with the same hash replaces the old one"""
        payloads = [row.to_dict() if hasattr(row, 'to_dict') else dict(row) for row in rows]
        cursor = self.conn.cursor()
        cursor.execute("DELETE FROM records WHERE config_hash = ?", (config_hash,))
        cursor.execute("""
            INSERT OR REPLACE INTO runs VALUES (?, ?, ?, ?, ?)
        """, (
            config_hash,
            command,
            json.dumps(spec, sort_keys=True, default=str),
            __version__,
            len(payloads)
        ))
        cursor.executemany(
            "INSERT INTO records VALUES (?, ?, ?)",
            [(config_hash, i, json.dumps(p, sort_keys=True)) for i, p in enumerate(payloads)]
        )
        self.conn.commit()

    def has_run(self, config_hash: str) -> bool:
        cursor = self.conn.cursor()
        cursor.execute("SELECT 1 FROM runs WHERE config_hash = ?", (config_hash,))
        return cursor.fetchone() is not None

    def load_rows(self, config_hash: str) -> List[Dict[str, Any]]:
        """Stored row payloads in their original order"""
        cursor = self.conn.cursor()
        cursor.execute(
            "SELECT payload FROM records WHERE config_hash = ? ORDER BY row_index",
            (config_hash,)
        )
        return [json.loads(row['payload']) for row in cursor.fetchall()]

    def load_records(self, config_hash: str) -> List[SweepRecord]:
        return [SweepRecord.from_dict(p) for p in self.load_rows(config_hash)]

    def list_runs(self) -> List[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute("SELECT config_hash, command, version, n_records FROM runs ORDER BY command, config_hash")
        return [dict(row) for row in cursor.fetchall()]

    def close(self):
        """Close database connection"""
        if self.conn:
            self.conn.close()
