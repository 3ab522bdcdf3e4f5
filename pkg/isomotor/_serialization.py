"""JSON serialization shared by configurations, design files and reports"""

import json
import os
import tempfile
from abc import abstractmethod
from pathlib import Path
from typing import Any, Dict, Union

from .common.validators import PathValidator

__all__ = ["JsonSerializer", "atomic_write_text"]


def atomic_write_text(file_path: Union[str, Path], text: str) -> None:
    """Write text to a sibling temporary file and rename it over the target

    Parameters
    ----------
    file_path : Union[str, Path]
        destination, its folder is created when missing
    text : str
        file content, written with '\\n' line endings
    """
    PathValidator().validate(file_path)
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=file_path.parent, prefix=f".{file_path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, mode="w", encoding="utf-8", newline="\n") as fio:
            fio.write(text)
        os.replace(temp_name, file_path)
    except BaseException:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise


class JsonSerializer:
    """Mixin for objects stored as a single JSON document

    Subclasses provide `to_dict` and `from_dict`; files are read and written here.
    """

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any]):
        """Build an instance from its dictionary form"""
        return

    @classmethod
    def load_json(cls, file_path: Union[str, Path]):
        """Read a JSON document and build an instance of the calling class

        Parameters
        ----------
        file_path : Union[str, Path]
            JSON document written by `dump_json` or by hand

        Returns
        -------
        instance of the calling class

        Raises
        ------
        FileNotFoundError
            if the file does not exist
        json.JSONDecodeError
            if the file is not valid JSON
        """
        PathValidator().validate(file_path)
        with open(file_path, "r", encoding="utf-8") as fio:
            data: Dict[str, Any] = json.load(fio)
        return cls.from_dict(data)

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Plain dictionary of JSON types"""
        return {}

    def dump_json(self, file_path: Union[str, Path], overwrite: bool = False) -> None:
        """Write `to_dict` as indented JSON, atomically

        Parameters
        ----------
        file_path : Union[str, Path]
            destination, missing folders are created
        overwrite : bool, optional
            replace an existing file, by default False

        Raises
        ------
        FileExistsError
            if the destination exists and `overwrite` is off
        """
        PathValidator().validate(file_path)
        if Path(file_path).exists() and not overwrite:
            raise FileExistsError(f"refusing to overwrite {file_path}")
        atomic_write_text(file_path, json.dumps(self.to_dict(), indent=4) + "\n")
