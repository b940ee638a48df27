"""
Export and import of suites and campaign rows
"""
import os
import json
import csv
import logging
from typing import List, Any, Optional

from campaign import CampaignRow
from database import CampaignDatabase
from errors import ConfigError
from scene import TestCase, canonical_json, case_to_dict, case_from_dict, canonical_float

logger = logging.getLogger(__name__)

SUITE_VERSION = 1

# Fixed CSV column order of the report
CSV_COLUMNS = [
    'source_id', 'followup_id', 'task', 'mr', 'strictness', 'delta', 'distance',
    'lower', 'upper', 'violated', 'oracle_success', 'oracle_reason', 'labels',
    'status', 'skip_reason', 'fault',
]


def format_cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(canonical_float(value))
    if isinstance(value, (list, tuple)):
        return ';'.join(str(v) for v in value)
    return str(value)


def parse_cell(column: str, text: str):
    if column in ('violated', 'oracle_success'):
        return None if text == '' else text == 'true'
    if column in ('delta', 'distance', 'lower', 'upper'):
        return None if text == '' else float(text)
    if column == 'labels':
        return [label for label in text.split(';') if label]
    return text


def _ensure_parent(file_path: str):
    parent = os.path.dirname(file_path)
    if parent and not os.path.exists(parent):
        os.makedirs(parent)


class DataExporter:
    def export_to_json(self, data: Any, file_path: str):
        """Write any JSON-serialisable value in canonical form"""
        _ensure_parent(file_path)
        with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(canonical_json(data))

    def export_suite(self, cases: List[TestCase], file_path: str, seed: int = 0):
        """Export a source suite to JSON"""
        self.export_to_json({
            'suite_version': SUITE_VERSION,
            'seed': seed,
            'cases': [case_to_dict(tc) for tc in cases],
        }, file_path)
        logger.info("Wrote %d cases to %s", len(cases), file_path)

    def export_rows_to_csv(self, rows: List[CampaignRow], file_path: str):
        """Export campaign rows to CSV, one line per (source, MR, strictness)"""
        _ensure_parent(file_path)
        with open(file_path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator='\n')
            writer.writeheader()

            for row in rows:
                data = row.to_dict()
                writer.writerow({k: format_cell(data[k]) for k in CSV_COLUMNS})


class DataImporter:
    def __init__(self, db: Optional[CampaignDatabase] = None):
        self.db = db

    def import_suite(self, file_path: str) -> List[TestCase]:
        """Import a source suite from JSON"""
        if not os.path.exists(file_path):
            raise ConfigError(f"Suite file not found: {file_path}")
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Malformed suite file {file_path}: {e}") from e

        if not isinstance(data, dict) or not isinstance(data.get('cases'), list):
            raise ConfigError(f"Suite file {file_path} has no 'cases' list")
        if data.get('suite_version', SUITE_VERSION) != SUITE_VERSION:
            raise ConfigError(f"Unsupported suite version {data.get('suite_version')}")
        return [case_from_dict(c) for c in data['cases']]

    def import_rows_from_csv(self, file_path: str) -> List[CampaignRow]:
        """Import campaign rows from a report CSV"""
        rows = []
        with open(file_path, 'r', encoding='utf-8', newline='') as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != CSV_COLUMNS:
                raise ConfigError(f"{file_path} does not have the report columns")
            for record in reader:
                rows.append(CampaignRow.from_dict({k: parse_cell(k, record[k]) for k in CSV_COLUMNS}))
        return rows

    def import_rows_to_db(self, file_path: str, seed: int = 0) -> int:
        """Store the rows of a report CSV as a new run. Returns number of rows imported."""
        if self.db is None:
            raise ConfigError("No rows database to import into")
        rows = self.import_rows_from_csv(file_path)
        fault = rows[0].fault if rows else "None"
        self.db.save_campaign(seed, fault, {'imported_from': os.path.basename(file_path)}, rows)
        return len(rows)
