"""JSONL trial log for benchmark runs.

Each line is a JSON object. The first line carries the run metadata
(benchmark configuration), then one line per trial with its status and
elapsed time.

Usage:
    from src.utils.run_logger import RunLogger

    with RunLogger("output/trials.jsonl", metadata=config.to_metadata()) as log:
        report = run_benchmark(config, run_logger=log)
"""

import json
import threading
import time
from pathlib import Path
from typing import Optional


class RunLogger:
    """Logs benchmark trials to JSONL."""

    def __init__(self, path: str, metadata: Optional[dict] = None):
        """Initialize logger.

        Args:
            path: Output JSONL file path.
            metadata: Optional dict written as first line (benchmark config, etc.)
        """
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.f = open(self.path, "w", encoding="utf-8")
        self.trial_count = 0
        self.start_time = time.monotonic()
        self._lock = threading.Lock()

        if metadata:
            self._write({"type": "run_metadata", **metadata})

    def log_trial(self, sigma: float, trial: int, status: str, elapsed: float, **fields) -> dict:
        """Log one finished trial. Returns the written dict."""
        entry = {
            "type": "trial",
            "sigma": sigma,
            "trial": trial,
            "status": status,
            "elapsed_sec": round(elapsed, 3),
            **fields,
        }
        with self._lock:
            self.trial_count += 1
            self._write(entry)
        return entry

    def log_event(self, event_type: str, **kwargs):
        """Log a custom event (outputs written, run aborted, etc.)."""
        elapsed = time.monotonic() - self.start_time
        entry = {
            "type": event_type,
            "elapsed_sec": round(elapsed, 3),
            **kwargs,
        }
        with self._lock:
            self._write(entry)

    def _write(self, entry: dict):
        self.f.write(json.dumps(entry) + "\n")
        self.f.flush()

    def close(self):
        if not self.f.closed:
            self.f.close()

    def __enter__(self):
        return self

    def __exit__(self, *args):
        self.close()
