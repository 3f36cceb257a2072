import json
from pathlib import Path
from typing import Generic, Type, TypeVar

from pydantic import BaseModel

DocumentType = TypeVar("DocumentType", bound=BaseModel)


def dump_json(document: BaseModel) -> str:
    """Stable JSON: declared field order, shortest round-trip floats, trailing newline."""
    return json.dumps(document.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


class BaseRepository(Generic[DocumentType]):
    def __init__(self, model: Type[DocumentType], root: str | Path):
        self.model = model
        self.root = Path(root)

    def path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.root / path

    def get(self, name: str) -> DocumentType | None:
        path = self.path(name)
        if not path.exists():
            return None
        return self.model.model_validate_json(path.read_text(encoding="utf-8"))

    def save(self, name: str, document: DocumentType) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dump_json(document), encoding="utf-8")
        return path
