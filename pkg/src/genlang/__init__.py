"""
GenLang: the small typed language the join generator writes, its compiler,
bytecode format and virtual machine.
"""

from src.genlang.bytecode import (
    CompiledUnit, Constant, MethodInfo, Op, read_unit, write_unit,
)
from src.genlang.compiler import (
    compile_classes, compile_count, compile_to_bytes, load_batch, load_unit,
    reset_compile_counter,
)
from src.genlang.runtime import ObjectArray, SeqValue, to_relation
from src.genlang.verifier import verify_unit
from src.genlang.vm import ClassRegistry, LoadedClass

__all__ = [
    'ClassRegistry', 'CompiledUnit', 'Constant', 'LoadedClass', 'MethodInfo',
    'ObjectArray', 'Op', 'SeqValue', 'compile_classes', 'compile_count',
    'compile_to_bytes', 'load_batch', 'load_unit', 'read_unit',
    'reset_compile_counter', 'to_relation', 'verify_unit', 'write_unit',
]
