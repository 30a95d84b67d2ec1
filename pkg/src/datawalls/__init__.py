"""Role-based access control behind Chinese-wall bit vectors, with a
three-tier de-identification / anonymisation pipeline."""

from importlib.resources import files
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled fixture (``case_study.yaml``, ``ehr_synthetic.csv``, ...)."""
    return Path(str(files("datawalls") / "data" / name))
