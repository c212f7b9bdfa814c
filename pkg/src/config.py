import json
import logging
import os

from dotenv import load_dotenv

from src.paths import ProjectPaths

# Load .env file if it exists
env_file = ProjectPaths.ENV_FILE
if env_file.exists():
    load_dotenv(env_file)


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logging.getLogger('config').warning(f"Invalid integer for {name}={raw!r}, using {default}")
        return default


def _env_bool(name, default=False):
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in ('1', 'true', 'yes', 'on')


# Base directory
BASE_DIR = ProjectPaths.ROOT

# Logging
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_MAX_SIZE = _env_int('LOG_MAX_SIZE', 10 * 1024 * 1024)
LOG_BACKUP_COUNT = _env_int('LOG_BACKUP_COUNT', 5)

# Persistent join cache
CACHE_DIR = os.getenv('RJ_CACHE_DIR', str(ProjectPaths.JOIN_CACHE))

# Sample relation files
DATA_DIR = os.getenv('RJ_DATA_DIR', str(ProjectPaths.DATA))

# Generated source spooling
SPOOL_DIR = os.getenv('RJ_SPOOL_DIR', str(ProjectPaths.SPOOL))
SPOOL_ENABLED = _env_bool('RJ_SPOOL', False)

# VM execution tier: 'translate' or 'interpret'
VM_MODE = os.getenv('RJ_VM_MODE', 'translate').strip().lower()
if VM_MODE not in ('translate', 'interpret'):
    logging.getLogger('config').warning(f"Unknown RJ_VM_MODE={VM_MODE!r}, using 'translate'")
    VM_MODE = 'translate'

# Benchmark protocol
BENCH_ITERATIONS = _env_int('RJ_BENCH_ITERATIONS', 10)
BENCH_WARMUP = _env_int('RJ_BENCH_WARMUP', 10)
BENCH_SEED = _env_int('RJ_BENCH_SEED', 1997)


def load_spool_state():
    """Spool toggle persisted by `reflectjoin spool`; overrides the env defaults."""
    state_file = ProjectPaths.SPOOL_STATE
    if not state_file.exists():
        return SPOOL_ENABLED, SPOOL_DIR
    try:
        state = json.loads(state_file.read_text(encoding='utf-8'))
        return bool(state.get('enabled', False)), state.get('dir') or SPOOL_DIR
    except (OSError, ValueError) as e:
        logging.getLogger('config').warning(f"Ignoring unreadable spool state: {e}")
        return SPOOL_ENABLED, SPOOL_DIR


def save_spool_state(enabled, directory):
    """Persist the spool toggle."""
    state_file = ProjectPaths.SPOOL_STATE
    state_file.parent.mkdir(parents=True, exist_ok=True)
    state_file.write_text(
        json.dumps({'enabled': bool(enabled), 'dir': str(directory)}, indent=2),
        encoding='utf-8',
    )


# Initialize required directories
try:
    ProjectPaths.create_required_dirs()
    ProjectPaths.verify_structure()
except RuntimeError as e:
    logging.getLogger('config').warning(f"Path setup warning: {e}")
