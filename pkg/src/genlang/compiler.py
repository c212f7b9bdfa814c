"""
Compiler entry points.

compile_to_bytes is pure: parse, check and emit a batch of classes without
touching any registry. compile_classes also loads the batch, all or nothing.
"""

import threading

from src.errors import CompilationError, ReflectJoinError
from src.genlang.codegen import generate_unit
from src.genlang.parser import parse_source
from src.genlang.typecheck import check_batch
from src.logger import get_logger

logger = get_logger('genlang')

_counter_lock = threading.Lock()
_compile_count = 0


def compile_count():
    """Number of units compiled in this process since the last reset."""
    return _compile_count


def reset_compile_counter():
    global _compile_count
    with _counter_lock:
        _compile_count = 0


def _count(units):
    global _compile_count
    with _counter_lock:
        _compile_count += units


def compile_to_bytes(class_names, definitions, schemas):
    """
    Compile a batch of GenLang classes that may refer to one another.

    Args:
        class_names: expected class name of each definition
        definitions: GenLang source text, one class per entry
        schemas: SchemaRegistry for classes outside the batch (read only)

    Returns:
        list of CompiledUnit, in input order

    Raises:
        CompilationError with phase syntax or type
    """
    class_names = list(class_names)
    definitions = list(definitions)
    if len(class_names) != len(definitions):
        raise CompilationError(
            f"{len(class_names)} class names for {len(definitions)} definitions", 'link'
        )
    decls = []
    for name, source in zip(class_names, definitions):
        decl = parse_source(source, name)
        if decl.name != name:
            raise CompilationError(f"source declares {decl.name}, expected {name}",
                                   'syntax', decl.line, name)
        decls.append(decl)
    batch = check_batch(decls, schemas)
    units = [generate_unit(decl, batch[decl.name]) for decl in decls]
    _count(len(units))
    logger.debug(f"Compiled {', '.join(class_names)}")
    return units


def load_batch(classes, units):
    """
    Load units into a ClassRegistry, all or nothing.

    Raises:
        CompilationError(phase='link') wrapping the loader failure
    """
    loaded, fresh = [], []
    current = None
    try:
        for unit in units:
            current = unit.class_name
            if unit.class_name not in classes:
                fresh.append(unit.class_name)
            loaded.append(classes.load(unit, resolve=False))
        for cls in loaded:
            current = cls.name
            classes.link(cls)
    except ReflectJoinError as e:
        for name in fresh:
            classes.unload(name)
        raise CompilationError(e.message, 'link', class_name=current) from e
    return loaded


def compile_classes(class_names, definitions, classes):
    """
    Compile a batch and load it into `classes`.

    Returns:
        list of LoadedClass, in input order
    """
    units = compile_to_bytes(class_names, definitions, classes.schemas)
    return load_batch(classes, units)


def load_unit(classes, unit, resolve=True):
    """Verify and load a single unit; see ClassRegistry.load."""
    return classes.load(unit, resolve=resolve)
