"""
Bytecode verifier.

A unit that passes verify_unit can be executed without the VM ever seeing a
stack underflow, a bad jump, an out-of-range local or pool index, or a
mismatched call. Type confusion inside well-formed code is still possible
for hand-built units; the VM reports it as a VmFault.
"""

from collections import namedtuple

from src.errors import ClassFormatError
from src.genlang.bytecode import (
    Op, TAG_INT, TAG_TEXT, TAG_CLASSREF, BRANCHES, TERMINATORS, decode_code,
)
from src.genlang.types import parse_signature, VOID, INT, TEXT
from src.meta import INT_MIN, INT_MAX
from src.utils import is_class_name, is_identifier

MethodAnalysis = namedtuple("MethodAnalysis", "max_depth instructions depths")

# (required depth, net effect) for fixed-shape instructions
_FIXED_EFFECTS = {
    Op.NOP: (0, 0), Op.CONST: (0, 1), Op.TRUE: (0, 1), Op.FALSE: (0, 1),
    Op.LOAD: (0, 1), Op.STORE: (1, -1), Op.POP: (1, -1), Op.DUP: (1, 1),
    Op.ACCESS: (1, 0), Op.EQ: (2, -1), Op.LT: (2, -1), Op.CONCAT: (2, -1),
    Op.CAST: (1, 0), Op.NEWARRAY: (1, 0), Op.ARRAYLEN: (1, 0), Op.ALOAD: (2, -1),
    Op.ASTORE: (3, -3), Op.NEWSEQ: (0, 1), Op.SEQADD: (2, -2), Op.SEQSIZE: (1, 0),
    Op.SEQGET: (2, -1), Op.JUMP: (0, 0), Op.JUMP_IF_FALSE: (1, -1), Op.INC: (0, 0),
    Op.RETURN: (1, -1), Op.RETURN_VOID: (0, 0), Op.EMIT: (1, -1),
}


def stack_effect(instr, constants, signatures):
    """
    (required depth, net effect) of one instruction.

    Args:
        signatures: method name -> (static, params, ret) of the unit
    """
    if instr.op is Op.NEW:
        argc = instr.args[1]
        return argc, 1 - argc
    if instr.op is Op.INVOKE:
        name = constants[instr.args[0]].value
        _, params, ret = signatures[name]
        argc = len(params)
        return argc, (0 if ret == VOID else 1) - argc
    return _FIXED_EFFECTS[instr.op]


def _fail(unit, method, message):
    where = f"{unit.class_name}.{method.name}" if method is not None else unit.class_name
    return ClassFormatError(f"{where}: {message}")


def _check_pool(unit):
    for i, const in enumerate(unit.constants):
        if const.tag == TAG_INT:
            if type(const.value) is not int or not INT_MIN <= const.value <= INT_MAX:
                raise _fail(unit, None, f"constant #{i} is not a 64-bit int")
        elif const.tag == TAG_TEXT:
            if type(const.value) is not str:
                raise _fail(unit, None, f"constant #{i} is not text")
        elif const.tag == TAG_CLASSREF:
            if not is_class_name(const.value):
                raise _fail(unit, None, f"constant #{i} is not a class name")
        else:
            raise _fail(unit, None, f"constant #{i} has unknown tag {const.tag}")


def _check_operands(unit, method, instr, signatures, accessor):
    constants = unit.constants

    def pool(index, *tags):
        if index >= len(constants) or constants[index].tag not in tags:
            raise _fail(unit, method, f"{instr.op.name} at {instr.offset} has bad pool index {index}")
        return constants[index]

    op = instr.op
    if op is Op.CONST:
        pool(instr.args[0], TAG_INT, TAG_TEXT)
    elif op in (Op.LOAD, Op.STORE, Op.INC):
        if instr.args[0] >= method.max_locals:
            raise _fail(unit, method, f"{op.name} at {instr.offset} uses local {instr.args[0]} "
                                      f"beyond max_locals {method.max_locals}")
    elif op in (Op.ACCESS, Op.CAST, Op.NEW, Op.NEWARRAY, Op.NEWSEQ):
        pool(instr.args[0], TAG_CLASSREF)
    elif op is Op.INVOKE:
        name = pool(instr.args[0], TAG_TEXT).value
        sig = signatures.get(name)
        if sig is None or not sig[0]:
            raise _fail(unit, method, f"call to unknown static method {name!r}")
        if len(sig[1]) != instr.args[1]:
            raise _fail(unit, method, f"call to {name} with {instr.args[1]} arguments, "
                                      f"expected {len(sig[1])}")
    if accessor and op not in (Op.LOAD, Op.ACCESS, Op.RETURN):
        raise _fail(unit, method, f"accessor body may not use {op.name}")


def analyze_method(unit, method, signatures, limit=None):
    """
    Verify one method body.

    Returns:
        MethodAnalysis: peak stack depth, decoded instructions, and the stack
        depth on entry to each instruction (None where unreachable)

    Raises:
        ClassFormatError on any structural violation, or when the depth
        exceeds `limit`
    """
    parsed = signatures[method.name]
    static, params, ret = parsed
    needed_locals = len(params) if static else 1
    if method.max_locals < needed_locals:
        raise _fail(unit, method, f"max_locals {method.max_locals} below parameter count")

    instructions = decode_code(method.code)
    if not instructions:
        raise _fail(unit, method, "empty method body")
    by_offset = {instr.offset: i for i, instr in enumerate(instructions)}
    for instr in instructions:
        _check_operands(unit, method, instr, signatures, accessor=not static)
        if instr.op in BRANCHES and instr.args[0] not in by_offset:
            raise _fail(unit, method, f"jump at {instr.offset} to non-instruction {instr.args[0]}")
        if instr.op is Op.RETURN and ret == VOID:
            raise _fail(unit, method, f"value return in void method at {instr.offset}")
        if instr.op is Op.RETURN_VOID and ret != VOID:
            raise _fail(unit, method, f"void return in {ret} method at {instr.offset}")

    depths = [None] * len(instructions)
    depths[0] = 0
    work = [0]
    max_depth = 0
    while work:
        i = work.pop()
        instr = instructions[i]
        required, effect = stack_effect(instr, unit.constants, signatures)
        depth = depths[i]
        if depth < required:
            raise _fail(unit, method, f"stack underflow at {instr.offset} ({instr.op.name})")
        after = depth + effect
        # Peak inside the instruction (DUP, loads) equals the depth after it
        max_depth = max(max_depth, after, depth)
        if limit is not None and max_depth > limit:
            raise _fail(unit, method, f"stack depth {max_depth} exceeds max_stack {limit}")

        successors = []
        if instr.op in BRANCHES:
            successors.append(by_offset[instr.args[0]])
        if instr.op not in TERMINATORS:
            if i + 1 >= len(instructions):
                raise _fail(unit, method, "control falls off the end of the method")
            successors.append(i + 1)
        for succ in successors:
            if depths[succ] is None:
                depths[succ] = after
                work.append(succ)
            elif depths[succ] != after:
                raise _fail(unit, method, f"inconsistent stack depth at "
                                          f"{instructions[succ].offset}")
    return MethodAnalysis(max_depth, instructions, depths)


def method_signatures(unit):
    """
    Parse every signature of the unit.

    Raises:
        ClassFormatError on malformed signatures or duplicate names
    """
    signatures = {}
    for method in unit.methods:
        if not is_identifier(method.name):
            raise _fail(unit, None, f"invalid method name {method.name!r}")
        if method.name in signatures:
            raise _fail(unit, None, f"duplicate method {method.name!r}")
        parsed = parse_signature(method.signature)
        if parsed is None:
            raise _fail(unit, method, f"malformed signature {method.signature!r}")
        static, params, ret = parsed
        if not static and (params or ret not in (INT, TEXT)):
            raise _fail(unit, method, f"accessor signature must be ()int or ()text")
        signatures[method.name] = parsed
    return signatures


def verify_unit(unit):
    """
    Structural verification of a CompiledUnit.

    Raises:
        ClassFormatError describing the first violation found
    """
    if not is_class_name(unit.class_name):
        raise ClassFormatError(f"invalid class name {unit.class_name!r}")
    if unit.interface_name is not None and not is_class_name(unit.interface_name):
        raise ClassFormatError(f"invalid interface name {unit.interface_name!r}")
    _check_pool(unit)
    signatures = method_signatures(unit)
    for method in unit.methods:
        analyze_method(unit, method, signatures, limit=method.max_stack)
    return True
