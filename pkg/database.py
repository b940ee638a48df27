"""
Campaign rows store
Handles all SQLite operations and schema management for campaign runs
"""
import sqlite3
import json
import logging
from typing import List, Dict, Any, Optional

import config
from campaign import CampaignRow
from errors import ConfigError

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    ('source_id', 'TEXT NOT NULL'),
    ('followup_id', 'TEXT NOT NULL'),
    ('task', 'TEXT NOT NULL'),
    ('mr', 'TEXT NOT NULL'),
    ('strictness', 'TEXT NOT NULL'),
    ('delta', 'REAL'),
    ('distance', 'REAL'),
    ('lower', 'REAL'),
    ('upper', 'REAL'),
    ('violated', 'BOOLEAN DEFAULT 0'),
    ('oracle_success', 'BOOLEAN'),
    ('oracle_reason', "TEXT DEFAULT ''"),
    ('labels', "TEXT DEFAULT '[]'"),
    ('status', "TEXT DEFAULT 'ok'"),
    ('skip_reason', "TEXT DEFAULT ''"),
    ('fault', "TEXT DEFAULT 'None'"),
]


class CampaignDatabase:
    def __init__(self, db_file: str = config.ROWS_DB_FILE):
        self.db_file = db_file
        self.connection = None
        self.cursor = None
        self.connect()
        self.initialize_schema()

    def connect(self):
        """Establish database connection"""
        try:
            self.connection = sqlite3.connect(self.db_file)
        except sqlite3.Error as e:
            raise ConfigError(f"Cannot open rows file {self.db_file}: {e}") from e
        self.connection.row_factory = sqlite3.Row
        self.cursor = self.connection.cursor()

    def close(self):
        """Close database connection"""
        if self.connection:
            self.connection.close()
            self.connection = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def initialize_schema(self):
        """Create the runs and campaign_rows tables"""
        try:
            self.cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    seed INTEGER NOT NULL,
                    fault TEXT NOT NULL,
                    config TEXT NOT NULL
                )
            """)

            columns = ",\n".join(f"{name} {sql_type}" for name, sql_type in ROW_COLUMNS)
            self.cursor.execute(f"""
                CREATE TABLE IF NOT EXISTS campaign_rows (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    position INTEGER NOT NULL,
                    {columns},
                    FOREIGN KEY (run_id) REFERENCES runs(id) ON DELETE CASCADE
                )
            """)
            self.connection.commit()
        except sqlite3.DatabaseError as e:
            raise ConfigError(f"{self.db_file} is not a rows database: {e}") from e

    def insert_run(self, seed: int, fault: str, run_config: Dict[str, Any]) -> int:
        """Register a campaign run; returns its id"""
        self.cursor.execute(
            "INSERT INTO runs (seed, fault, config) VALUES (?, ?, ?)",
            (seed, fault, json.dumps(run_config, sort_keys=True))
        )
        self.connection.commit()
        return self.cursor.lastrowid

    def insert_rows(self, run_id: int, rows: List[CampaignRow]):
        names = [name for name, _ in ROW_COLUMNS]
        placeholders = ', '.join(['?'] * (len(names) + 2))
        query = f"INSERT INTO campaign_rows (run_id, position, {', '.join(names)}) VALUES ({placeholders})"

        values = []
        for position, row in enumerate(rows):
            data = row.to_dict()
            data['labels'] = json.dumps(data['labels'])
            values.append((run_id, position) + tuple(data[name] for name in names))

        self.cursor.executemany(query, values)
        self.connection.commit()
        logger.debug("Stored %d rows for run %d in %s", len(rows), run_id, self.db_file)

    def save_campaign(self, seed: int, fault: str, run_config: Dict[str, Any],
                      rows: List[CampaignRow]) -> int:
        run_id = self.insert_run(seed, fault, run_config)
        self.insert_rows(run_id, rows)
        return run_id

    def get_runs(self) -> List[Dict[str, Any]]:
        """Get all runs, oldest first"""
        self.cursor.execute("SELECT * FROM runs ORDER BY id")
        runs = []
        for row in self.cursor.fetchall():
            run = dict(row)
            run['config'] = json.loads(run['config'])
            runs.append(run)
        return runs

    def latest_run_id(self) -> Optional[int]:
        self.cursor.execute("SELECT MAX(id) AS id FROM runs")
        row = self.cursor.fetchone()
        return row['id'] if row else None

    def get_rows(self, run_id: Optional[int] = None) -> List[CampaignRow]:
        """Rows of a run in their stored order (the latest run by default)"""
        if run_id is None:
            run_id = self.latest_run_id()
            if run_id is None:
                return []

        self.cursor.execute("SELECT * FROM campaign_rows WHERE run_id = ? ORDER BY position", (run_id,))
        return [self._row_from_record(dict(record)) for record in self.cursor.fetchall()]

    def count_rows(self, run_id: int) -> int:
        self.cursor.execute("SELECT COUNT(*) AS count FROM campaign_rows WHERE run_id = ?", (run_id,))
        return self.cursor.fetchone()['count']

    @staticmethod
    def _row_from_record(record: Dict[str, Any]) -> CampaignRow:
        data = {name: record[name] for name, _ in ROW_COLUMNS}
        data['violated'] = bool(data['violated'])
        if data['oracle_success'] is not None:
            data['oracle_success'] = bool(data['oracle_success'])
        data['labels'] = json.loads(data['labels'] or '[]')
        data['skip_reason'] = data['skip_reason'] or ''
        return CampaignRow.from_dict(data)
