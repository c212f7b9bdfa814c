"""
Dynamic Path Management System
==============================
All project paths in one place, relative to the repository root so the
engine and the benchmark harness stay portable.
"""

from pathlib import Path


def get_project_root():
    """
    Root directory of the project.

    src/paths.py -> one level up -> root
    """
    current_file = Path(__file__).resolve()
    return current_file.parent.parent


class ProjectPaths:
    """Every path the project reads or writes."""

    # Source directories
    ROOT = get_project_root()
    SRC = ROOT / "src"
    SCRIPTS = ROOT / "scripts"
    DOCS = ROOT / "docs"

    # Data directories (auto-created)
    DATA = ROOT / "data"
    LOGS = ROOT / "logs"
    CACHE = ROOT / ".cache"
    JOIN_CACHE = CACHE / "joins"
    SPOOL = ROOT / "spool"
    REPORTS = ROOT / "reports"

    # Config / state files
    ENV_FILE = ROOT / ".env"
    SPOOL_STATE = CACHE / "spool.json"

    @classmethod
    def create_required_dirs(cls):
        """Create the writable directories."""
        for directory in (cls.DATA, cls.LOGS, cls.CACHE, cls.REPORTS):
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def verify_structure(cls):
        """Check the source tree is intact."""
        required = [cls.SRC, cls.SCRIPTS]
        missing = [d for d in required if not d.exists()]

        if missing:
            raise RuntimeError(f"Missing required directories: {missing}")

        return True


def safe_join(base_path, *parts):
    """
    Join path components below base_path, refusing directory traversal.

    Returns:
        Path that stays inside base_path
    """
    base = Path(base_path).resolve()
    result = base

    for part in parts:
        part = str(part).replace("..", "").lstrip("/").lstrip("\\")
        result = result / part

    try:
        result.resolve().relative_to(base)
    except ValueError:
        raise ValueError(f"Path traversal attempt detected: {parts}")

    return result
