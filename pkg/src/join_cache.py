"""
Persistent Join Cache
=====================
Compiled join classes keyed by the types they were generated for.

On a hit the cached join class is invoked directly; no source is generated
and nothing is compiled. On a miss the reflective pipeline runs once and both
compiled units are written out:

    <cache dir>/<hex16>.rjbc       join class
    <cache dir>/<hex16>.res.rjbc   result class
    <cache dir>/<hex16>.meta       canonical key text and class names

The .meta file is written last, so an entry without one is incomplete and
ignored. Disk problems never fail a join: unreadable entries are evicted and
regenerated, and I/O errors fall back to the uncached path with a warning.
"""

import os
import threading
from dataclasses import dataclass
from pathlib import Path

from src.errors import (
    InvalidJoin, IncompatibleDomains, ReflectJoinError, ClassFormatError, CacheError,
)
from src.generator import NatJoin, maybe_phase
from src.genlang import load_batch, read_unit, verify_unit, write_unit
from src.logger import get_logger
from src.paths import safe_join
from src.relations import TypedRelation
from src.utils import fingerprint64, fingerprint_hex

logger = get_logger('join_cache')

_META_FIELDS = ('canonical', 'join', 'result')


@dataclass(frozen=True)
class JoinCacheKey:
    """Fingerprint of (left schema, right schema, optional interface)."""
    fingerprint: int
    canonical: str

    @classmethod
    def of(cls, left, right, interface=None):
        parts = [left.canonical_form(), right.canonical_form(),
                 interface.canonical_form() if interface is not None else '-']
        canonical = '|'.join(parts)
        return cls(fingerprint64(canonical), canonical)

    @property
    def hex(self):
        return fingerprint_hex(self.fingerprint)

    @property
    def join_class(self):
        return f"CJ{self.hex}"

    @property
    def result_class(self):
        return f"CR{self.hex}"


@dataclass
class _Entry:
    key: JoinCacheKey
    join: object        # LoadedClass
    result: object      # LoadedClass


class JoinCache:
    """
    Memory map key -> loaded join class, backed by a directory of compiled
    units. Hits run concurrently; a miss holds a per-key latch so concurrent
    first calls compile once.

    Args:
        directory: cache directory, or None for a memory-only cache
        natjoin: NatJoin engine whose registries receive the cached classes
    """

    def __init__(self, directory=None, natjoin=None):
        self.natjoin = natjoin if natjoin is not None else NatJoin(spool=False)
        self.directory = None
        if directory is not None:
            try:
                Path(directory).mkdir(parents=True, exist_ok=True)
                self.directory = Path(directory)
            except OSError as e:
                logger.warning(f"Join cache directory {directory} unusable, memory only: {e}")
        self._memory = {}
        self._latches = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    # ---------- files ----------

    def _paths(self, key):
        stem = key.hex
        return (safe_join(self.directory, f"{stem}.rjbc"),
                safe_join(self.directory, f"{stem}.res.rjbc"),
                safe_join(self.directory, f"{stem}.meta"))

    def _latch(self, key):
        with self._lock:
            latch = self._latches.get(key.fingerprint)
            if latch is None:
                latch = self._latches[key.fingerprint] = threading.Lock()
            return latch

    def evict(self, key):
        """Drop an entry from disk (memory is left to the caller)."""
        if self.directory is None:
            return
        for path in self._paths(key):
            try:
                path.unlink(missing_ok=True)
            except OSError as e:
                logger.warning(f"Could not remove cache file {path}: {e}")
        self.evictions += 1

    def _read_meta(self, path, key):
        fields = {}
        for line in path.read_text(encoding='utf-8').splitlines():
            name, _, value = line.partition(' ')
            if name in _META_FIELDS:
                fields[name] = value
        if fields.get('join') != key.join_class or fields.get('result') != key.result_class:
            raise CacheError(f"malformed metadata in {path.name}")
        return fields

    def _read_disk(self, key):
        """
        Units of a disk entry, or None when there is no usable entry.
        Corrupt entries are evicted.
        """
        if self.directory is None:
            return None
        join_path, result_path, meta_path = self._paths(key)
        try:
            if not meta_path.exists():
                return None
            meta = self._read_meta(meta_path, key)
            if meta.get('canonical') != key.canonical:
                # fingerprint collision or stale entry; never reuse it
                logger.warning(f"Join cache key {key.hex} holds {meta.get('canonical')!r}, "
                               f"not {key.canonical!r}")
                return None
            units = [read_unit(join_path.read_bytes()), read_unit(result_path.read_bytes())]
            for unit, expected in zip(units, (key.join_class, key.result_class)):
                if unit.class_name != expected:
                    raise ClassFormatError(f"cache entry {key.hex} holds {unit.class_name}")
                verify_unit(unit)
            return units
        except (ClassFormatError, CacheError, UnicodeDecodeError) as e:
            logger.warning(f"Evicting corrupt join cache entry {key.hex}: {e}")
            self.evict(key)
            return None
        except OSError as e:
            logger.warning(f"Join cache read failed for {key.hex}, compiling instead: {e}")
            return None

    def _write_atomic(self, path, data):
        tmp = path.with_name(path.name + '.tmp')
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def _persist(self, key, units):
        if self.directory is None:
            return
        join_path, result_path, meta_path = self._paths(key)
        meta = f"canonical {key.canonical}\njoin {key.join_class}\nresult {key.result_class}\n"
        try:
            self._write_atomic(join_path, write_unit(units[0]))
            self._write_atomic(result_path, write_unit(units[1]))
            self._write_atomic(meta_path, meta.encode('utf-8'))
            logger.debug(f"Persisted join cache entry {key.hex}")
        except OSError as e:
            logger.warning(f"Could not persist join cache entry {key.hex}: {e}")

    # ---------- lookup ----------

    def _memory_hit(self, key):
        entry = self._memory.get(key.fingerprint)
        if entry is None or entry.key.canonical != key.canonical:
            return None
        if entry.join.name not in self.natjoin.classes:
            return None
        return entry

    def _built_for(self, plan, loaded):
        """True when loaded [join, result] classes were generated for `plan`."""
        join, result = loaded
        match = join.method('match')
        if match is None or [p.name for p in match.params] != [plan.left.class_name,
                                                               plan.right.class_name]:
            return False
        interface = plan.interface.class_name if plan.interface is not None else None
        return (result.schema.attributes == tuple(self.natjoin.result_attributes(plan))
                and result.schema.implements_interface == interface)

    def _fill(self, key, rel1, rel2, result_interface, timer):
        """Miss path under the key latch: disk, then the full pipeline."""
        natjoin = self.natjoin
        plan = natjoin.plan(rel1, rel2, result_interface)
        classes = natjoin.classes
        loaded = None
        if key.join_class in classes or key.result_class in classes:
            loaded = [classes.get(key.join_class), classes.get(key.result_class)]
            if None in loaded or not self._built_for(plan, loaded):
                logger.warning(f"Join cache names of {key.hex} are taken by classes generated "
                               f"for other types, joining uncached")
                return None
            self._persist(key, [c.unit for c in loaded])
        else:
            units = self._read_disk(key)
            if units is not None:
                try:
                    with maybe_phase(timer, 'compileLoad'):
                        loaded = load_batch(classes, units)
                    logger.info(f"Join cache disk hit {key.hex}")
                except ReflectJoinError as e:
                    logger.warning(f"Evicting join cache entry {key.hex} that failed to load: "
                                   f"{e.message}")
                    self.evict(key)
            if loaded is None:
                with maybe_phase(timer, 'generate'):
                    sources = natjoin.generate(plan, key.join_class, key.result_class)
                with maybe_phase(timer, 'compileLoad'):
                    units = natjoin.compile_units([key.join_class, key.result_class], sources)
                    loaded = natjoin.load_units(units)
                self._persist(key, units)
                logger.info(f"Join cache miss {key.hex}: compiled "
                            f"{plan.left.class_name} x {plan.right.class_name}")
        entry = _Entry(key, loaded[0], loaded[1])
        with self._lock:
            self._memory[key.fingerprint] = entry
        return entry

    def lookup(self, rel1, rel2, result_interface=None, timer=None):
        """
        Loaded join class for the relations' types, compiling on a miss.
        None when the classes under the key's names were generated for other
        types (a fingerprint collision).

        Raises:
            InvalidJoin, IncompatibleDomains, CompilationError
        """
        if not isinstance(rel1, TypedRelation) or not isinstance(rel2, TypedRelation):
            raise InvalidJoin("join failed: Invalid input relations")
        interface = self.natjoin.resolve_interface(result_interface)
        key = JoinCacheKey.of(rel1.schema, rel2.schema, interface)
        with maybe_phase(timer, 'compileLoad'):
            entry = self._memory_hit(key)
        if entry is not None:
            self.hits += 1
            return entry
        with self._latch(key):
            entry = self._memory_hit(key)
            if entry is not None:
                self.hits += 1
                return entry
            self.misses += 1
            return self._fill(key, rel1, rel2, interface, timer)

    def clear_memory(self):
        with self._lock:
            self._memory.clear()

    def clear_disk(self):
        """Delete every cache file in the directory."""
        if self.directory is None:
            return 0
        removed = 0
        for pattern in ('*.rjbc', '*.meta', '*.tmp'):
            for path in self.directory.glob(pattern):
                try:
                    path.unlink()
                    removed += 1
                except OSError as e:
                    logger.warning(f"Could not remove cache file {path}: {e}")
        return removed

    def __len__(self):
        return len(self._memory)


def cached_reflective_join(cache, rel1, rel2, result_interface=None, timer=None):
    """
    natJoinWithInterface through a JoinCache: the same result, with generation
    and compilation only on the first call for a pair of types.

    Raises:
        InvalidJoin (wrapping any failure after validation), IncompatibleDomains
    """
    natjoin = cache.natjoin
    try:
        entry = cache.lookup(rel1, rel2, result_interface, timer)
    except (InvalidJoin, IncompatibleDomains):
        raise
    except ReflectJoinError as e:
        raise InvalidJoin(f"join failed: {e.message}", cause=e) from e
    except OSError as e:
        logger.warning(f"Join cache unavailable, joining uncached: {e}")
        return natjoin.nat_join_with_interface(rel1, rel2, result_interface, timer)
    if entry is None:
        return natjoin.nat_join_with_interface(rel1, rel2, result_interface, timer)
    try:
        with maybe_phase(timer, 'join'):
            return natjoin.run_join(entry.join, rel1, rel2)
    except ReflectJoinError as e:
        raise InvalidJoin(f"join failed: {e.message}", cause=e) from e
