"""
File storage manager for per-case execution traces
"""
import os
import shutil
from typing import List

import config
from simulator import ExecutionResult, dump_trace


class StorageManager:
    def __init__(self, base_dir: str = os.path.join(config.OUTPUT_DIR, config.TRACES_DIR)):
        self.base_dir = base_dir
        self._ensure_base_dir()

    def _ensure_base_dir(self):
        """Ensure the base storage directory exists"""
        if not os.path.exists(self.base_dir):
            os.makedirs(self.base_dir)

    def get_trace_path(self, case_id: str) -> str:
        """Absolute path of a case's trace file"""
        return os.path.join(self.base_dir, f"{case_id}.jsonl")

    def save_trace(self, case_id: str, result: ExecutionResult) -> str:
        """
        Save a per-step trace as JSON lines
        Returns the path relative to the storage directory
        """
        path = self.get_trace_path(case_id)
        dump_trace(result, path)
        return os.path.relpath(path, self.base_dir)

    def list_traces(self) -> List[str]:
        return sorted(name[:-len(".jsonl")] for name in os.listdir(self.base_dir) if name.endswith(".jsonl"))

    def clear(self):
        """Delete every stored trace"""
        if os.path.exists(self.base_dir):
            shutil.rmtree(self.base_dir)
        self._ensure_base_dir()
