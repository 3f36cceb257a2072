from app.repositories.artifact_repository import CsvRepository, ReportRepository
from app.repositories.base import BaseRepository
from app.repositories.covering_repository import CoveringRepository
from app.repositories.signal_repository import SignalRepository

__all__ = [
    "BaseRepository",
    "CoveringRepository",
    "CsvRepository",
    "ReportRepository",
    "SignalRepository",
]
