"""Lexer, recursive-descent parser and pretty-printer for the loop language.

Grammar (C-like)::

    program := decl* stmt*
    decl    := ("u" | "i") INT ident ";"          e.g. u8 x;  i16 y;
    stmt    := ident "=" expr ";" | ident "=" "nondet" "(" ")" ";"
             | "while" "(" expr ")" block | "if" "(" expr ")" block ("else" block)?
    block   := "{" stmt* "}" | stmt

``x++``, ``x--`` and compound assignments (``x -= e``) are accepted and
desugared on the spot.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class UnsupportedConstruct(ParseError):
    def __init__(self, construct: str, line: int = 0, col: int = 0):
        super().__init__(f"unsupported construct: {construct}", line, col)
        self.construct = construct


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Name:
    id: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Name, Unary, Binary]


@dataclass(frozen=True)
class Decl:
    name: str
    signed: bool
    width: int


@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr


@dataclass(frozen=True)
class Nondet:
    target: str


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: tuple = ()


Stmt = Union[Assign, Nondet, While, If]


@dataclass(frozen=True)
class SourceProgram:
    decls: tuple
    body: tuple

    def loop_count(self) -> int:
        return _count(self.body)[0]

    def depth(self) -> int:
        return _count(self.body)[1]


def _count(stmts) -> tuple[int, int]:
    n = depth = 0
    for s in stmts:
        if isinstance(s, While):
            cn, cd = _count(s.body)
            n += 1 + cn
            depth = max(depth, 1 + cd)
        elif isinstance(s, If):
            for branch in (s.then, s.orelse):
                cn, cd = _count(branch)
                n += cn
                depth = max(depth, cd)
    return n, depth


# ---------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*|/\*.*?\*/)
  | (?P<nl>\n)
  | (?P<num>0[xX][0-9a-fA-F]+|\d+(?:\.\d*)?(?:[uUlL]*))
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><<=|>>=|\+\+|--|<<|>>|<=|>=|==|!=|&&|\|\||[-+*/%&|^]=|[-+*/%&|^~!<>=(){};,\[\]?:.])
""", re.VERBOSE | re.DOTALL)

_UNSUPPORTED_WORDS = {
    "goto": "goto", "for": "for loop", "do": "do-while loop", "break": "break",
    "continue": "continue", "return": "return", "float": "floating-point type",
    "double": "floating-point type", "struct": "struct", "switch": "switch",
}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ws":
            nls = tok.count("\n")
            if nls:
                line += nls
                line_start = pos + tok.rfind("\n") + 1
        else:
            if kind == "num" and "." in tok:
                raise UnsupportedConstruct("floating-point literal", line, col)
            tokens.append(Token(kind, tok, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- parser

_BINARY_PREC = [
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
    ("<", "<=", ">", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%"),
]
_DECL = re.compile(r"^([ui])(\d+)$")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.declared: dict[str, Decl] = {}

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def program(self) -> SourceProgram:
        decls = []
        while self.tok.kind == "id" and _DECL.match(self.tok.text):
            decls.append(self.decl())
        body = []
        while self.tok.kind != "eof":
            body.append(self.stmt())
        return SourceProgram(tuple(decls), tuple(body))

    def decl(self) -> Decl:
        t = self.advance()
        m = _DECL.match(t.text)
        width = int(m.group(2))
        if not 1 <= width <= 64:
            self.error(f"width {width} outside 1..64", t)
        name_tok = self.advance()
        if name_tok.kind != "id":
            self.error("expected a variable name", name_tok)
        if self.tok.text == "[":
            raise UnsupportedConstruct("array", self.tok.line, self.tok.col)
        if name_tok.text in self.declared:
            self.error(f"variable {name_tok.text!r} declared twice", name_tok)
        d = Decl(name_tok.text, m.group(1) == "i", width)
        self.declared[d.name] = d
        self.expect(";")
        return d

    def block(self) -> tuple:
        if self.tok.text == "{":
            self.advance()
            out = []
            while self.tok.text != "}":
                if self.tok.kind == "eof":
                    self.error("unterminated block")
                out.append(self.stmt())
            self.advance()
            return tuple(out)
        return (self.stmt(),)

    def stmt(self) -> Stmt:
        t = self.tok
        if t.kind == "id" and t.text in _UNSUPPORTED_WORDS:
            raise UnsupportedConstruct(_UNSUPPORTED_WORDS[t.text], t.line, t.col)
        if t.kind == "id" and _DECL.match(t.text) and self.peek().kind == "id":
            self.error("declarations must precede statements")
        if t.text == "while":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block())
        if t.text == "if":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = ()
            if self.tok.text == "else":
                self.advance()
                orelse = self.block()
            return If(cond, then, orelse)
        if t.text == "{":
            self.error("bare blocks are not supported")
        if t.text == ";":
            self.error("empty statement")
        if t.kind != "id":
            if t.text == "*":
                raise UnsupportedConstruct("pointer dereference", t.line, t.col)
            self.error(f"unexpected {t.text!r}")
        target = self.name_ref(self.advance())
        op = self.tok
        if op.text == "[":
            raise UnsupportedConstruct("array", op.line, op.col)
        if op.text == "(":
            raise UnsupportedConstruct("function call", op.line, op.col)
        if op.text in ("++", "--"):
            self.advance()
            self.expect(";")
            return Assign(target.id, Binary(op.text[0], target, Num(1)))
        if op.text.endswith("=") and op.text not in ("==", "<=", ">=", "!=") and len(op.text) > 1:
            self.advance()
            rhs = self.expr()
            self.expect(";")
            return Assign(target.id, Binary(op.text[:-1], target, rhs))
        self.expect("=")
        if self.tok.text == "nondet" and self.peek().text == "(":
            self.advance()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return Nondet(target.id)
        rhs = self.expr()
        self.expect(";")
        return Assign(target.id, rhs)

    def name_ref(self, t: Token) -> Name:
        if t.text not in self.declared:
            self.error(f"undeclared variable {t.text}", t)
        return Name(t.text, t.line, t.col)

    def expr(self, level=0) -> Expr:
        if level == len(_BINARY_PREC):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.text in _BINARY_PREC[level]:
            op = self.advance().text
            right = self.expr(level + 1)
            left = Binary(op, left, right)
        if level == 0 and self.tok.text == "?":
            raise UnsupportedConstruct("conditional expression", self.tok.line, self.tok.col)
        return left

    def unary(self) -> Expr:
        t = self.tok
        if t.text in ("-", "~", "!", "+"):
            self.advance()
            arg = self.unary()
            return arg if t.text == "+" else Unary(t.text, arg)
        if t.text in ("&", "*"):
            raise UnsupportedConstruct("pointer operation", t.line, t.col)
        return self.atom()

    def atom(self) -> Expr:
        t = self.advance()
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "num":
            return Num(int(t.text.rstrip("uUlL"), 0))
        if t.kind == "id":
            if self.tok.text == "(":
                if t.text == "nondet":
                    self.error("nondet() may only appear as a whole right-hand side", t)
                raise UnsupportedConstruct("function call", t.line, t.col)
            if self.tok.text == "[":
                raise UnsupportedConstruct("array", self.tok.line, self.tok.col)
            return self.name_ref(t)
        self.error(f"unexpected {t.text or 'end of input'!r}", t)


def parse(text: str) -> SourceProgram:
    """Parse program text; raises :class:`ParseError` with line/column on failure."""
    return _Parser(text).program()


# ---------------------------------------------------------------- printing


def format_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Unary):
        return f"{e.op}({format_expr(e.arg)})"
    return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"


def format_program(p: SourceProgram) -> str:
    lines = [f"{'i' if d.signed else 'u'}{d.width} {d.name};" for d in p.decls]
    _format_block(p.body, 0, lines)
    return "\n".join(lines) + "\n"


def _format_block(stmts, indent, out):
    pad = "  " * indent
    for s in stmts:
        if isinstance(s, Assign):
            out.append(f"{pad}{s.target} = {format_expr(s.value)};")
        elif isinstance(s, Nondet):
            out.append(f"{pad}{s.target} = nondet();")
        elif isinstance(s, While):
            out.append(f"{pad}while ({format_expr(s.cond)}) {{")
            _format_block(s.body, indent + 1, out)
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}if ({format_expr(s.cond)}) {{")
            _format_block(s.then, indent + 1, out)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                _format_block(s.orelse, indent + 1, out)
            out.append(f"{pad}}}")
