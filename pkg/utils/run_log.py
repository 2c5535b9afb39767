import json
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional

from utils.logger import setup_logger

logger = setup_logger("run_log")

EVENTS = (
    "synth-start",
    "candidate",
    "synth-exhausted",
    "cex",
    "verif-valid",
    "param-change",
    "generalize",
    "verdict",
)


class RunLog:
    """Machine-readable record of one solver run.

    Records carry a sequence number, the event name and event fields. They never
    carry wall-clock values, so two deterministic runs produce identical logs.
    """

    def __init__(self, path: Optional[str] = None):
        self.records: List[Dict[str, Any]] = []
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._fh = None
        if self.path:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._fh = open(self.path, "w", encoding="utf-8")
            except OSError as e:
                logger.error(f"Error opening run log {self.path}: {str(e)}")
                raise

    def emit(self, event: str, **fields: Any) -> Dict[str, Any]:
        if event not in EVENTS:
            raise ValueError(f"Unknown run log event: {event}")
        with self._lock:
            record = {"seq": len(self.records), "event": event, **fields}
            self.records.append(record)
            if self._fh:
                self._fh.write(json.dumps(record, sort_keys=True) + "\n")
                self._fh.flush()
        return record

    def events(self, name: str) -> List[Dict[str, Any]]:
        return [r for r in self.records if r["event"] == name]

    def attempted_lengths(self) -> List[int]:
        return [r["l"] for r in self.events("synth-start")]

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    @staticmethod
    def load(path: str) -> List[Dict[str, Any]]:
        with open(path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
