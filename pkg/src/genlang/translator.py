"""
Load-time translation of verified bytecode into Python functions.

Each static method becomes one `m_<name>` function. Stack slots and locals
turn into Python locals (`s<k>`, `l<n>`); pure stack operations are folded
into expressions and only flushed to slots where order of evaluation or a
block boundary needs it. Methods with branches run as a dispatch loop over
their basic blocks, innermost loops tested first; short blocks that just
bump a counter and jump are copied into the branch that reaches them.

The translation is only ever fed verified units, so every block is entered
with a known stack depth.
"""

from src.errors import ReflectJoinError, ArrayBoundsError, NullReferenceError, VmFault
from src.errors import StackOverflowError
from src.genlang.bytecode import Op, BRANCHES, TERMINATORS
from src.genlang.runtime import SeqValue, new_array, render_value, check_cast, emit
from src.genlang.types import VOID
from src.logger import get_logger
from src.relations import TupleValue

logger = get_logger('genlang')

_TAIL_OPS = (Op.INC, Op.LOAD, Op.STORE, Op.CONST, Op.POP, Op.NOP, Op.TRUE, Op.FALSE)
_TAIL_LIMIT = 4


def _negative_index(index):
    raise ArrayBoundsError(f"index {index} out of bounds")


def _index_fault(exc, where):
    return ArrayBoundsError(f"{where}: {exc}")


def _attribute_fault(exc, where):
    # Reading an attribute of a null tuple is the only legal way to get here
    if "'NoneType'" in str(exc):
        return NullReferenceError(f"{where}: null tuple")
    return VmFault(f"{where}: AttributeError: {exc}")


def _overflow(where):
    return StackOverflowError(f"call depth exceeded in {where}")


def _fault(exc, where):
    return VmFault(f"{where}: {type(exc).__name__}: {exc}")


def _bad_pc(pc, where):
    return VmFault(f"{where}: no block at {pc}")


def _paren(expr, atomic):
    return expr if atomic else f"({expr})"


def _literal(value):
    if type(value) is int and value < 0:
        return f"({value})"
    return repr(value)


class _MethodTranslator:
    def __init__(self, loaded, method):
        self.loaded = loaded
        self.method = method
        self.where = f"{loaded.name}.{method.name}"
        self.constants = loaded.unit.constants
        self.instructions = method.analysis.instructions
        self.depths = method.analysis.depths
        self.index_of = {ins.offset: i for i, ins in enumerate(self.instructions)}
        self.leaders = {0}
        for ins in self.instructions:
            if ins.op in BRANCHES:
                self.leaders.add(self.index_of[ins.args[0]])

    # ---------- symbolic stack ----------

    def materialize(self, stack, keep_top, out, indent):
        """Flush every entry except the top `keep_top` into its slot."""
        for k in range(len(stack) - keep_top):
            expr, _ = stack[k]
            name = f"s{k}"
            if expr != name:
                out.append(f"{indent}{name} = {expr}")
                stack[k] = (name, True)

    def pop_args(self, stack, count):
        if not count:
            return []
        args = stack[-count:]
        del stack[-count:]
        return args

    # ---------- control flow ----------

    def is_tail(self, target):
        for k in range(target, min(target + _TAIL_LIMIT + 1, len(self.instructions))):
            ins = self.instructions[k]
            if k != target and k in self.leaders:
                return False
            if ins.op in TERMINATORS:
                return True
            if ins.op not in _TAIL_OPS:
                return False
        return False

    def goto(self, target, out, indent, inline_ok):
        if inline_ok and self.is_tail(target):
            self.emit_block(target, out, indent, inline_ok=False)
        else:
            out.append(f"{indent}pc = {target}")
            out.append(f"{indent}continue")

    def emit_block(self, start, out, indent, inline_ok=True):
        stack = [(f"s{k}", True) for k in range(self.depths[start])]
        i = start
        while True:
            if self.emit_instruction(self.instructions[i], stack, out, indent, inline_ok):
                return
            nxt = i + 1
            if nxt in self.leaders:
                self.materialize(stack, 0, out, indent)
                self.goto(nxt, out, indent, inline_ok)
                return
            i = nxt

    def emit_instruction(self, ins, stack, out, indent, inline_ok):
        """Translate one instruction; True when it ends the block."""
        op, args = ins.op, ins.args
        if op is Op.NOP:
            pass
        elif op is Op.CONST:
            stack.append((_literal(self.constants[args[0]].value), True))
        elif op is Op.TRUE:
            stack.append(('True', True))
        elif op is Op.FALSE:
            stack.append(('False', True))
        elif op is Op.LOAD:
            stack.append((f"l{args[0]}", True))
        elif op is Op.STORE:
            self.materialize(stack, 1, out, indent)
            out.append(f"{indent}l{args[0]} = {stack.pop()[0]}")
        elif op is Op.POP:
            self.materialize(stack, 1, out, indent)
            expr, atomic = stack.pop()
            if not atomic:
                out.append(f"{indent}{expr}")
        elif op is Op.DUP:
            self.materialize(stack, 0, out, indent)
            stack.append(stack[-1])
        elif op is Op.INC:
            self.materialize(stack, 0, out, indent)
            out.append(f"{indent}l{args[0]} += 1")

        elif op is Op.ACCESS:
            expr, atomic = stack.pop()
            stack.append((f"{_paren(expr, atomic)}.values[{args[1]}]", False))
        elif op in (Op.EQ, Op.LT):
            right, left = stack.pop(), stack.pop()
            symbol = "==" if op is Op.EQ else "<"
            stack.append((f"{_paren(*left)} {symbol} {_paren(*right)}", False))
        elif op is Op.CONCAT:
            right, left = stack.pop()[0], stack.pop()[0]
            stack.append((f"{_paren(left, False)} + _render({right})", False))
        elif op is Op.CAST:
            cls = self.constants[args[0]].value
            stack.append((f"_cast({stack.pop()[0]}, {cls!r})", False))
        elif op is Op.NEW:
            cls = self.constants[args[0]].value
            values = [expr for expr, _ in self.pop_args(stack, args[1])]
            trailing = ',' if len(values) == 1 else ''
            stack.append((f"_TV({cls!r}, ({', '.join(values)}{trailing}))", False))
        elif op is Op.NEWARRAY:
            cls = self.constants[args[0]].value
            stack.append((f"_new_array({cls!r}, {stack.pop()[0]})", False))
        elif op is Op.NEWSEQ:
            cls = self.constants[args[0]].value
            stack.append((f"_Seq({cls!r}, [])", False))
        elif op in (Op.ARRAYLEN, Op.SEQSIZE):
            expr, atomic = stack.pop()
            stack.append((f"len({_paren(expr, atomic)}.items)", False))
        elif op in (Op.ALOAD, Op.SEQGET):
            if not stack[-1][1]:
                self.materialize(stack, 0, out, indent)
            index = stack.pop()[0]
            container, atomic = stack.pop()
            read = f"{_paren(container, atomic)}.items[{index}]"
            if index.isdigit():
                stack.append((read, False))
            else:
                stack.append((f"{read} if {index} >= 0 else _neg({index})", False))
        elif op is Op.ASTORE:
            self.materialize(stack, 0, out, indent)
            value, index, array = stack.pop()[0], stack.pop()[0], stack.pop()[0]
            out.append(f"{indent}if {index} < 0: _neg({index})")
            out.append(f"{indent}{array}.items[{index}] = {value}")
        elif op is Op.SEQADD:
            self.materialize(stack, 2, out, indent)
            value = stack.pop()[0]
            seq, atomic = stack.pop()
            out.append(f"{indent}{_paren(seq, atomic)}.items.append({value})")
        elif op is Op.INVOKE:
            name = self.constants[args[0]].value
            self.materialize(stack, args[1], out, indent)
            call = f"m_{name}({', '.join(e for e, _ in self.pop_args(stack, args[1]))})"
            if self.loaded.methods[name].ret == VOID:
                out.append(f"{indent}{call}")
            else:
                stack.append((call, False))
        elif op is Op.EMIT:
            self.materialize(stack, 1, out, indent)
            out.append(f"{indent}_emit({stack.pop()[0]})")

        elif op is Op.JUMP:
            self.materialize(stack, 0, out, indent)
            self.goto(self.index_of[args[0]], out, indent, inline_ok)
            return True
        elif op is Op.JUMP_IF_FALSE:
            self.materialize(stack, 1, out, indent)
            cond, atomic = stack.pop()
            out.append(f"{indent}if not {_paren(cond, atomic)}:")
            self.goto(self.index_of[args[0]], out, indent + '    ', inline_ok)
        elif op is Op.RETURN:
            self.materialize(stack, 1, out, indent)
            out.append(f"{indent}return {stack.pop()[0]}")
            return True
        elif op is Op.RETURN_VOID:
            self.materialize(stack, 0, out, indent)
            out.append(f"{indent}return None")
            return True
        else:
            raise VmFault(f"{self.where}: cannot translate {op.name}")
        return False

    # ---------- assembly ----------

    def loop_depths(self):
        depth = {leader: 0 for leader in self.leaders}
        for i, ins in enumerate(self.instructions):
            if ins.op in BRANCHES:
                target = self.index_of[ins.args[0]]
                if target <= i:
                    for leader in depth:
                        if target <= leader <= i:
                            depth[leader] += 1
        return depth

    def source(self):
        info = self.method.info
        params = [f"l{n}" for n in range(self.method.arity)]
        out = [f"def m_{self.method.name}({', '.join(params)}):"]
        extra = [f"l{n}" for n in range(self.method.arity, info.max_locals)]
        if extra:
            out.append(f"    {' = '.join(extra)} = None")
        out.append("    try:")
        if not any(ins.op in BRANCHES for ins in self.instructions):
            self.emit_block(0, out, ' ' * 8)
        else:
            out.append("        pc = 0")
            out.append("        while True:")
            depths = self.loop_depths()
            order = sorted((leader for leader in self.leaders if self.depths[leader] is not None),
                           key=lambda leader: (-depths[leader], leader))
            for n, leader in enumerate(order):
                keyword = 'if' if n == 0 else 'elif'
                out.append(f"            {keyword} pc == {leader}:")
                self.emit_block(leader, out, ' ' * 16)
            out.append("            else:")
            out.append(f"                raise _bad_pc(pc, {self.where!r})")
        where = repr(self.where)
        out += [
            "    except _RJError:",
            "        raise",
            "    except IndexError as exc:",
            f"        raise _index_fault(exc, {where}) from None",
            "    except AttributeError as exc:",
            f"        raise _attribute_fault(exc, {where}) from None",
            "    except RecursionError:",
            f"        raise _overflow({where}) from None",
            "    except Exception as exc:",
            f"        raise _fault(exc, {where}) from None",
        ]
        return '\n'.join(out)


def translate_class(schemas, loaded):
    """Translate every static method of a loaded class; sets method.function."""
    namespace = {
        '_TV': TupleValue,
        '_Seq': SeqValue,
        '_new_array': new_array,
        '_cast': lambda value, target: check_cast(value, target, schemas),
        '_neg': _negative_index,
        '_render': render_value,
        '_emit': emit,
        '_RJError': ReflectJoinError,
        '_index_fault': _index_fault,
        '_attribute_fault': _attribute_fault,
        '_overflow': _overflow,
        '_fault': _fault,
        '_bad_pc': _bad_pc,
    }
    static_methods = [m for m in loaded.methods.values() if m.static]
    text = '\n\n\n'.join(_MethodTranslator(loaded, m).source() for m in static_methods) + '\n'
    exec(compile(text, f"<genlang {loaded.name}>", 'exec'), namespace)
    for method in static_methods:
        method.function = namespace[f"m_{method.name}"]
    loaded.translated_source = text
    logger.debug(f"Translated {loaded.name}: {len(static_methods)} static methods")
