"""
Recursive-descent parser for GenLang.

One source unit declares exactly one class. Anything outside the grammar is
a CompilationError with phase 'syntax' and the offending line.
"""

from src.errors import CompilationError
from src.genlang import syntax as ast
from src.genlang.lexer import tokenize
from src.genlang.types import GType, class_type, array_type, seq_type

_PRIMITIVE_KEYWORDS = ('int', 'text', 'boolean', 'any', 'void')


class Parser:
    def __init__(self, source, class_name=None):
        self.class_name = class_name
        self.tokens = tokenize(source, class_name)
        self.pos = 0

    # ---------- token helpers ----------

    @property
    def current(self):
        return self.tokens[self.pos]

    def peek(self, offset=1):
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self):
        token = self.tokens[self.pos]
        if token.kind != 'eof':
            self.pos += 1
        return token

    def error(self, message, token=None):
        token = token or self.current
        return CompilationError(message, 'syntax', token.line, self.class_name)

    def describe(self, token):
        if token.kind == 'eof':
            return 'end of input'
        return repr(token.value)

    def expect_punct(self, text):
        token = self.current
        if not token.is_punct(text):
            raise self.error(f"expected {text!r}, found {self.describe(token)}")
        return self.advance()

    def expect_keyword(self, text):
        token = self.current
        if not token.is_keyword(text):
            raise self.error(f"expected {text!r}, found {self.describe(token)}")
        return self.advance()

    def expect_ident(self):
        token = self.current
        if token.kind != 'ident':
            raise self.error(f"expected identifier, found {self.describe(token)}")
        return self.advance().value

    def expect_member_name(self):
        # Attribute names may coincide with keywords (e.g. an attribute called `text`)
        token = self.current
        if token.kind not in ('ident', 'keyword'):
            raise self.error(f"expected member name, found {self.describe(token)}")
        return self.advance().value

    # ---------- declarations ----------

    def parse_unit(self):
        if self.current.is_keyword('public'):
            self.advance()
        line = self.expect_keyword('class').line
        name = self.expect_ident()
        interface = None
        if self.current.is_keyword('implements'):
            self.advance()
            interface = self.expect_ident()
        self.expect_punct('{')
        accessors, methods = [], []
        while not self.current.is_punct('}'):
            if self.current.kind == 'eof':
                raise self.error("unterminated class body")
            if self.current.is_keyword('public') or self.current.is_keyword('static'):
                methods.append(self.parse_method())
            else:
                accessors.append(self.parse_accessor())
        self.expect_punct('}')
        if self.current.kind != 'eof':
            raise self.error(f"unexpected {self.describe(self.current)} after class body")
        return ast.ClassDecl(name, interface, accessors, methods, line)

    def parse_accessor(self):
        line = self.current.line
        attr_type = self.parse_type()
        name = self.expect_member_name()
        self.expect_punct('(')
        self.expect_punct(')')
        self.expect_punct(';')
        return ast.AccessorDecl(attr_type, name, line)

    def parse_method(self):
        if self.current.is_keyword('public'):
            self.advance()
        line = self.expect_keyword('static').line
        return_type = self.parse_type()
        name = self.expect_ident()
        self.expect_punct('(')
        params = []
        if not self.current.is_punct(')'):
            while True:
                p_line = self.current.line
                p_type = self.parse_type()
                params.append(ast.Param(p_type, self.expect_ident(), p_line))
                if not self.current.is_punct(','):
                    break
                self.advance()
        self.expect_punct(')')
        body = self.parse_block().body
        return ast.MethodDecl(name, params, return_type, body, line)

    def parse_type(self):
        token = self.current
        if token.kind == 'keyword' and token.value in _PRIMITIVE_KEYWORDS:
            self.advance()
            return GType(token.value)
        if token.is_keyword('seq'):
            self.advance()
            self.expect_punct('<')
            name = self.expect_ident()
            self.expect_punct('>')
            return seq_type(name)
        if token.kind == 'ident':
            self.advance()
            if self.current.is_punct('['):
                self.advance()
                self.expect_punct(']')
                return array_type(token.value)
            return class_type(token.value)
        raise self.error(f"expected a type, found {self.describe(token)}")

    # ---------- statements ----------

    def parse_block(self):
        line = self.expect_punct('{').line
        body = []
        while not self.current.is_punct('}'):
            if self.current.kind == 'eof':
                raise self.error("unterminated block")
            body.append(self.parse_statement())
        self.expect_punct('}')
        return ast.Block(line, body)

    def parse_body(self):
        """Body of for/if: a block or a single statement."""
        if self.current.is_punct('{'):
            return self.parse_block().body
        return [self.parse_statement()]

    def starts_declaration(self):
        token = self.current
        if token.kind == 'keyword' and token.value in _PRIMITIVE_KEYWORDS + ('seq',):
            return True
        if token.kind != 'ident':
            return False
        nxt = self.peek()
        if nxt.kind == 'ident':
            return True
        return nxt.is_punct('[') and self.peek(2).is_punct(']')

    def parse_statement(self):
        token = self.current
        if token.is_punct('{'):
            return self.parse_block()
        if token.is_keyword('for'):
            return self.parse_for()
        if token.is_keyword('if'):
            self.advance()
            self.expect_punct('(')
            cond = self.parse_expr()
            self.expect_punct(')')
            return ast.If(token.line, cond, self.parse_body())
        if token.is_keyword('return'):
            self.advance()
            value = None
            if not self.current.is_punct(';'):
                value = self.parse_expr()
            self.expect_punct(';')
            return ast.Return(token.line, value)
        if token.is_keyword('emit'):
            self.advance()
            self.expect_punct('(')
            value = self.parse_expr()
            self.expect_punct(')')
            self.expect_punct(';')
            return ast.Emit(token.line, value)
        if self.starts_declaration():
            var_type = self.parse_type()
            name = self.expect_ident()
            self.expect_punct('=')
            init = self.parse_expr()
            self.expect_punct(';')
            return ast.VarDecl(token.line, var_type, name, init)

        expr = self.parse_expr()
        if self.current.is_punct('='):
            if not isinstance(expr, (ast.Var, ast.Index)):
                raise self.error("left side of assignment is not assignable")
            self.advance()
            value = self.parse_expr()
            self.expect_punct(';')
            return ast.Assign(token.line, expr, value)
        self.expect_punct(';')
        return ast.ExprStmt(token.line, expr)

    def parse_for(self):
        line = self.expect_keyword('for').line
        self.expect_punct('(')
        self.expect_keyword('int')
        var = self.expect_ident()
        self.expect_punct('=')
        start = self.parse_expr()
        self.expect_punct(';')
        if self.expect_ident() != var:
            raise self.error(f"loop condition must test {var!r}")
        self.expect_punct('<')
        bound = self.parse_expr()
        self.expect_punct(';')
        if self.expect_ident() != var:
            raise self.error(f"loop update must increment {var!r}")
        self.expect_punct('++')
        self.expect_punct(')')
        return ast.For(line, var, start, bound, self.parse_body())

    # ---------- expressions ----------

    def parse_expr(self):
        left = self.parse_equality()
        while self.current.is_punct('&&'):
            line = self.advance().line
            left = ast.And(line, left, self.parse_equality())
        return left

    def parse_equality(self):
        left = self.parse_concat()
        if self.current.is_punct('=='):
            line = self.advance().line
            left = ast.Equals(line, left, self.parse_concat())
            if self.current.is_punct('=='):
                raise self.error("'==' does not chain")
        return left

    def parse_concat(self):
        left = self.parse_unary()
        while self.current.is_punct('+'):
            line = self.advance().line
            left = ast.Concat(line, left, self.parse_unary())
        return left

    def is_cast(self):
        return (self.current.is_punct('(')
                and self.peek(1).kind == 'ident'
                and self.peek(2).is_punct('[')
                and self.peek(3).is_punct(']')
                and self.peek(4).is_punct(')'))

    def parse_unary(self):
        if self.is_cast():
            line = self.advance().line
            name = self.advance().value
            self.pos += 3
            return ast.Cast(line, name, self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_primary()
        while True:
            if self.current.is_punct('.'):
                line = self.advance().line
                name = self.expect_member_name()
                if name == 'length' and not self.current.is_punct('('):
                    expr = ast.Length(line, expr)
                else:
                    expr = ast.MemberCall(line, expr, name, self.parse_args())
            elif self.current.is_punct('['):
                line = self.advance().line
                index = self.parse_expr()
                self.expect_punct(']')
                expr = ast.Index(line, expr, index)
            else:
                return expr

    def parse_args(self):
        self.expect_punct('(')
        args = []
        if not self.current.is_punct(')'):
            while True:
                args.append(self.parse_expr())
                if not self.current.is_punct(','):
                    break
                self.advance()
        self.expect_punct(')')
        return args

    def parse_primary(self):
        token = self.current
        if token.kind == 'int':
            self.advance()
            return ast.IntLit(token.line, token.value)
        if token.kind == 'string':
            self.advance()
            return ast.TextLit(token.line, token.value)
        if token.is_keyword('true') or token.is_keyword('false'):
            self.advance()
            return ast.BoolLit(token.line, token.value == 'true')
        if token.is_keyword('new'):
            return self.parse_new()
        if token.kind == 'ident':
            self.advance()
            if self.current.is_punct('('):
                return ast.Call(token.line, token.value, self.parse_args())
            return ast.Var(token.line, token.value)
        if token.is_punct('('):
            self.advance()
            expr = self.parse_expr()
            self.expect_punct(')')
            return expr
        raise self.error(f"unexpected {self.describe(token)}")

    def parse_new(self):
        line = self.expect_keyword('new').line
        if self.current.is_keyword('seq'):
            self.advance()
            self.expect_punct('<')
            name = self.expect_ident()
            self.expect_punct('>')
            self.expect_punct('(')
            self.expect_punct(')')
            return ast.NewSeq(line, name)
        name = self.expect_ident()
        if self.current.is_punct('['):
            self.advance()
            size = self.parse_expr()
            self.expect_punct(']')
            return ast.NewArray(line, name, size)
        return ast.NewObject(line, name, self.parse_args())


def parse_source(source, class_name=None):
    """Parse one source unit into a ClassDecl."""
    return Parser(source, class_name).parse_unit()
