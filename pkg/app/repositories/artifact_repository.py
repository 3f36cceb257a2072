import csv
from pathlib import Path
from typing import Iterable

from pydantic import BaseModel

from app.repositories.base import BaseRepository


class ReportRepository(BaseRepository[BaseModel]):
    """JSON certificates and summaries under the run's output directory."""

    def __init__(self, root: str | Path):
        super().__init__(BaseModel, root)


class CsvRepository:
    """Plot-ready long-format tables; one header per file, rows in the order given."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.root / path

    def append(self, name: str, rows: Iterable[BaseModel | dict]) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        records = [row.model_dump(mode="json") if isinstance(row, BaseModel) else dict(row) for row in rows]
        if not records:
            return path
        fieldnames = list(records[0])
        write_header = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            if write_header:
                writer.writeheader()
            writer.writerows(records)
        return path

    def read(self, name: str) -> list[dict[str, str]]:
        path = self.path(name)
        if not path.exists():
            return []
        with open(path, newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))
