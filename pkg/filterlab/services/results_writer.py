"""Ordered CSV writer for sweep results"""
import csv
import logging
import threading
from pathlib import Path
from typing import Dict, List, Set, Tuple

from ..schemas.schemas import KEY_COLUMNS, RESULT_COLUMNS, PointStatusEnum, ResultsRecord

logger = logging.getLogger(__name__)


def read_rows(path) -> List[Dict[str, str]]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != RESULT_COLUMNS:
            logger.warning(f"{path} has a different column layout; ignoring its rows")
            return []
        return list(reader)


def completed_keys(rows: List[Dict[str, str]]) -> Set[Tuple[str, ...]]:
    return {
        tuple(row[c] for c in KEY_COLUMNS)
        for row in rows
        if row["status"] == PointStatusEnum.OK.value
    }


class ResultsWriter:
    """Single writer serializing rows in task order.

    Tasks may finish out of order; their rows are buffered until every earlier
    task has been written, so the file content does not depend on scheduling.
    Each row is flushed as soon as it is written.
    """

    def __init__(self, path, resume: bool = False):
        self.path = Path(path)
        self.resume = resume
        self._lock = threading.Lock()
        self._pending: Dict[int, List[ResultsRecord]] = {}
        self._next = 0
        self._handle = None
        self._writer = None
        self.kept_rows: List[Dict[str, str]] = []
        self.rows_written = 0

    def __enter__(self) -> "ResultsWriter":
        self.open()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def open(self) -> Set[Tuple[str, ...]]:
        """Open the file; on resume keep ok rows and return their keys"""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.resume:
            self.kept_rows = [r for r in read_rows(self.path) if r["status"] == PointStatusEnum.OK.value]
        self._handle = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.DictWriter(self._handle, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        self._writer.writeheader()
        for row in self.kept_rows:
            self._writer.writerow(row)
        self._handle.flush()
        return completed_keys(self.kept_rows)

    def submit(self, index: int, records: List[ResultsRecord]) -> None:
        with self._lock:
            self._pending[index] = records
            while self._next in self._pending:
                for record in self._pending.pop(self._next):
                    self._writer.writerow(record.to_row())
                    self._handle.flush()
                    self.rows_written += 1
                self._next += 1

    def close(self) -> None:
        if self._handle is None:
            return
        with self._lock:
            if self._pending:
                logger.warning(f"{len(self._pending)} task(s) never reached the writer in order")
                for index in sorted(self._pending):
                    for record in self._pending[index]:
                        self._writer.writerow(record.to_row())
                self._pending.clear()
            self._handle.close()
            self._handle = None
