"""Frontend for a C subset: tokenizer, recursive-descent parser, and the
heuristic classification of identifiers that lets us analyze functions in
isolation, without headers or a working build.

Decompiler output rarely compiles, so this parser deliberately does not try
to be a conforming C frontend. Unknown type names are accepted as opaque
type text, and undeclared identifiers are resolved by how they are used:
an identifier that only ever appears in call position is taken to be a
function; one that is used as a value is taken to be a global variable.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

TYPE_KEYWORDS = {
    "void", "char", "short", "int", "long", "float", "double",
    "signed", "unsigned", "_Bool", "bool",
    "const", "volatile", "static", "register", "inline",
    "struct", "union", "enum",
}

# Statement/expression keywords the parser dispatches on.
STMT_KEYWORDS = {
    "if", "else", "while", "for", "do", "switch", "case", "default",
    "return", "break", "continue", "goto", "asm", "__asm", "__asm__",
    "sizeof",
}

KEYWORDS = TYPE_KEYWORDS | STMT_KEYWORDS


class ErrorKind(Enum):
    PARSE_ERROR = "ParseError"
    UNSUPPORTED_FEATURE = "UnsupportedFeature"
    IRREDUCIBLE_CFG = "IrreducibleCfg"


class SubsetError(Exception):
    """Raised when source text falls outside the supported C subset.

    UNSUPPORTED_FEATURE is reserved for the documented exclusions: goto and
    labels, inline assembly, variadic function definitions, preprocessor
    directives inside a function body, and sizeof. Everything else that
    fails to parse is a PARSE_ERROR. IRREDUCIBLE_CFG is raised later, by
    loop analysis.
    """

    def __init__(self, kind: ErrorKind, message: str, span: Optional["Span"] = None):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.span = span

    def __repr__(self):
        return f"SubsetError({self.kind.value}, {self.message!r}, {self.span})"


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __repr__(self):
        return f"{self.line}:{self.col}"


####################
#    Tokenizer     #
####################

ID, NUM, STR, CHAR, PUNCT, EOF = "id", "num", "str", "char", "punct", "eof"

# Longest-match-first punctuation table.
PUNCTUATION = [
    "<<=", ">>=", "...",
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
    "(", ")", "{", "}", "[", "]", ";", ",", ".", "?", ":", "#",
]

_ESCAPES = {
    "n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34,
    "a": 7, "b": 8, "f": 12, "v": 11,
}


@dataclass
class Token:
    kind: str
    text: str
    value: object
    span: Span

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r})"


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source)

    def span():
        return Span(line, col)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            advance((j if j != -1 else n) - i)
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j == -1:
                raise SubsetError(ErrorKind.PARSE_ERROR, "unterminated comment", span())
            advance(j + 2 - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            tokens.append(Token(ID, text, text, span()))
            advance(j - i)
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isalnum() or source[j] in "._" or
                             (source[j] in "+-" and source[j - 1] in "eEpP")):
                j += 1
            text = source[i:j]
            tokens.append(Token(NUM, text, _parse_number(text, span()), span()))
            advance(j - i)
            continue
        if c == '"':
            value, length = _scan_string(source, i, span())
            tokens.append(Token(STR, source[i:i + length], value, span()))
            advance(length)
            continue
        if c == "'":
            value, length = _scan_char(source, i, span())
            tokens.append(Token(CHAR, source[i:i + length], value, span()))
            advance(length)
            continue
        for p in PUNCTUATION:
            if source.startswith(p, i):
                tokens.append(Token(PUNCT, p, p, span()))
                advance(len(p))
                break
        else:
            raise SubsetError(ErrorKind.PARSE_ERROR, f"unexpected character {c!r}", span())
    tokens.append(Token(EOF, "", None, Span(line, col)))
    return tokens


def _parse_number(text: str, span: Span) -> Union[int, float]:
    # Suffixes are stripped so 0LL, 0u and 0 all normalize to the same value.
    body = text.rstrip("uUlLfF")
    try:
        if body.startswith(("0x", "0X")):
            return int(body, 16)
        if "." in body or (("e" in body or "E" in body) and not body.startswith(("0x", "0X"))):
            return float(body)
        if body.startswith("0") and len(body) > 1 and body.isdigit():
            return int(body, 8)
        return int(body)
    except ValueError:
        raise SubsetError(ErrorKind.PARSE_ERROR, f"bad numeric literal {text!r}", span)


def _scan_string(source: str, i: int, span: Span) -> Tuple[bytes, int]:
    out = bytearray()
    j = i + 1
    while j < len(source) and source[j] != '"':
        if source[j] == "\\" and j + 1 < len(source):
            e = source[j + 1]
            if e == "x":
                k = j + 2
                while k < len(source) and source[k] in "0123456789abcdefABCDEF":
                    k += 1
                out.append(int(source[j + 2:k], 16) & 0xFF)
                j = k
                continue
            out.append(_ESCAPES.get(e, ord(e)))
            j += 2
            continue
        out.append(ord(source[j]) & 0xFF)
        j += 1
    if j >= len(source):
        raise SubsetError(ErrorKind.PARSE_ERROR, "unterminated string literal", span)
    return bytes(out), j + 1 - i


def _scan_char(source: str, i: int, span: Span) -> Tuple[int, int]:
    j = i + 1
    if j < len(source) and source[j] == "\\":
        if j + 1 >= len(source):
            raise SubsetError(ErrorKind.PARSE_ERROR, "unterminated character literal", span)
        value = _ESCAPES.get(source[j + 1], ord(source[j + 1]))
        j += 2
    elif j < len(source) and source[j] != "'":
        value = ord(source[j])
        j += 1
    else:
        raise SubsetError(ErrorKind.PARSE_ERROR, "empty character literal", span)
    if j >= len(source) or source[j] != "'":
        raise SubsetError(ErrorKind.PARSE_ERROR, "unterminated character literal", span)
    return value, j + 1 - i


####################
#    AST nodes     #
####################

# Spans never participate in structural equality; the parse -> unparse ->
# parse round trip must produce an equal tree even though positions move.

@dataclass
class Name:
    name: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    # Filled in by classify_identifiers.
    kind: Optional[str] = field(default=None, compare=False)
    symbol: Optional[str] = field(default=None, compare=False, repr=False)


@dataclass
class Num:
    value: Union[int, float]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Str:
    value: bytes
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Unary:
    op: str
    operand: "Expr"
    postfix: bool = False
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Bin:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Assign:
    op: str  # '=', '+=', '-=', ...
    target: "Expr"
    value: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Cond:
    cond: "Expr"
    then: "Expr"
    els: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Call:
    fn: "Expr"
    args: List["Expr"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Index:
    base: "Expr"
    index: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Member:
    base: "Expr"
    name: str
    arrow: bool
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class CastExpr:
    type_text: str
    operand: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Comma:
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


Expr = Union[Name, Num, Str, Unary, Bin, Assign, Cond, Call, Index, Member, CastExpr, Comma]


@dataclass
class Declarator:
    name: str
    pointer: int
    array_dims: List[Optional["Expr"]]
    init: Optional["Expr"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class DeclStmt:
    type_text: str
    declarators: List[Declarator]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class ExprStmt:
    expr: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Block:
    items: List["Stmt"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class If:
    cond: "Expr"
    then: "Stmt"
    els: Optional["Stmt"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class While:
    cond: "Expr"
    body: "Stmt"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class DoWhile:
    body: "Stmt"
    cond: "Expr"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class For:
    init: Optional["Stmt"]  # DeclStmt or ExprStmt
    cond: Optional["Expr"]
    step: Optional["Expr"]
    body: "Stmt"
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class SwitchCase:
    values: List["Expr"]  # empty only when is_default
    is_default: bool
    body: List["Stmt"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Switch:
    value: "Expr"
    cases: List[SwitchCase]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Return:
    value: Optional["Expr"]
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Break:
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Continue:
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Empty:
    span: Optional[Span] = field(default=None, compare=False, repr=False)


Stmt = Union[DeclStmt, ExprStmt, Block, If, While, DoWhile, For, Switch, Return, Break, Continue, Empty]


@dataclass
class Param:
    name: Optional[str]  # abstract declarators leave parameters unnamed
    type_text: str
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class Ast:
    """A single parsed function. Parameter order matches source order."""
    name: str
    params: List[Param]
    body: Block
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    classified: bool = field(default=False, compare=False)


####################
#     Parser       #
####################

ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}

# Binary operator precedence, loosest first.
_BINARY_LEVELS = [
    ["||"],
    ["&&"],
    ["|"],
    ["^"],
    ["&"],
    ["==", "!="],
    ["<", ">", "<=", ">="],
    ["<<", ">>"],
    ["+", "-"],
    ["*", "/", "%"],
]


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        # Names declared so far in the current function (parameters plus
        # locals, in lexical order). Used only for declaration/cast
        # disambiguation; the real classification pass runs afterward.
        self.declared: set = set()

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.text == text and tok.kind in (PUNCT, ID)

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            raise SubsetError(ErrorKind.PARSE_ERROR,
                              f"expected {text!r}, found {tok.text!r}", tok.span)
        return self.next()

    def error(self, message: str) -> SubsetError:
        return SubsetError(ErrorKind.PARSE_ERROR, message, self.peek().span)

    def unsupported(self, feature: str) -> SubsetError:
        return SubsetError(ErrorKind.UNSUPPORTED_FEATURE,
                           f"unsupported feature: {feature}", self.peek().span)

    # --- function discovery -------------------------------------------------

    def parse_functions(self) -> List[Ast]:
        functions = []
        while self.peek().kind != EOF:
            if self.at("#"):
                self._skip_directive_line()
                continue
            fn = self._try_parse_top_level_item()
            if fn is not None:
                functions.append(fn)
        return functions

    def _skip_directive_line(self):
        line = self.peek().span.line
        while self.peek().kind != EOF and self.peek().span.line == line:
            self.next()

    def _try_parse_top_level_item(self) -> Optional[Ast]:
        start = self.pos
        # Walk the type-and-name prefix. A '(' directly after an identifier
        # begins a parameter list; a ';' or '=' means this is a file-scope
        # declaration we skip; '{' right after struct/union/enum heads a type
        # definition we also skip.
        last_ident: Optional[Token] = None
        while True:
            tok = self.peek()
            if tok.kind == EOF:
                if self.pos == start:
                    return None
                raise self.error("unexpected end of input at top level")
            if tok.text == "#":
                self._skip_directive_line()
                continue
            if tok.kind == ID and tok.text not in KEYWORDS:
                last_ident = tok
                self.next()
                continue
            if tok.kind == ID or tok.text == "*":
                self.next()
                continue
            if tok.text == "(" and last_ident is not None:
                return self._parse_function_from(last_ident)
            if tok.text in (";", "="):
                self._skip_past_semicolon()
                return None
            if tok.text == "{":
                self._skip_braced()
                if self.at(";"):
                    self.next()
                return None
            if tok.text in ("[", ","):
                self.next()
                continue
            if tok.text == "]":
                self.next()
                continue
            raise self.error(f"unexpected {tok.text!r} at top level")

    def _skip_past_semicolon(self):
        while self.peek().kind != EOF and not self.at(";"):
            if self.at("{"):
                self._skip_braced()
            else:
                self.next()
        if self.at(";"):
            self.next()

    def _skip_braced(self):
        self.expect("{")
        depth = 1
        while depth > 0:
            tok = self.next()
            if tok.kind == EOF:
                raise self.error("unbalanced braces")
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                depth -= 1

    def _parse_function_from(self, name_tok: Token) -> Optional[Ast]:
        params = self._parse_params()
        if not self.at("{"):
            # A prototype, not a definition.
            self._skip_past_semicolon()
            return None
        self.declared = {p.name for p in params if p.name}
        body = self.parse_block()
        return Ast(name=name_tok.text, params=params, body=body, span=name_tok.span)

    def _parse_params(self) -> List[Param]:
        self.expect("(")
        params: List[Param] = []
        if self.at(")"):
            self.next()
            return params
        while True:
            if self.at("..."):
                raise self.unsupported("variadic function definition")
            type_tokens: List[Token] = []
            while not self.at(",") and not self.at(")"):
                if self.peek().kind == EOF or self.peek().text in ("{", "}", ";"):
                    raise self.error("malformed parameter list")
                if self.at("..."):
                    raise self.unsupported("variadic function definition")
                if self.at("("):
                    # Parenthesized declarator, typically a function-pointer
                    # parameter like `int (*cmp)(int, int)`: consume the
                    # balanced group so the real list terminator is found.
                    depth = 0
                    while True:
                        tok = self.peek()
                        if tok.kind == EOF:
                            raise self.error("malformed parameter list")
                        if tok.text == "(":
                            depth += 1
                        elif tok.text == ")":
                            depth -= 1
                            if depth == 0:
                                type_tokens.append(self.next())
                                break
                        type_tokens.append(self.next())
                    continue
                if self.at("["):
                    # Array parameter: consume the brackets, keep the name.
                    self.next()
                    while not self.at("]"):
                        if self.next().kind == EOF:
                            raise self.error("unterminated array parameter")
                    self.expect("]")
                    type_tokens.append(Token(PUNCT, "[]", "[]", self.peek().span))
                    continue
                type_tokens.append(self.next())
            name, type_parts = _extract_param_name(type_tokens)
            type_text = " ".join(type_parts)
            if not (type_text == "void" and name is None and len(params) == 0 and self.at(")")):
                params.append(Param(name=name, type_text=type_text,
                                    span=type_tokens[0].span if type_tokens else self.peek().span))
            if self.at(")"):
                self.next()
                return params
            self.expect(",")

    # --- statements ---------------------------------------------------------

    def parse_block(self) -> Block:
        start = self.expect("{").span
        items: List[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == EOF:
                raise self.error("unterminated block")
            items.append(self.parse_stmt())
        self.expect("}")
        return Block(items=items, span=start)

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if tok.text == "#":
            raise self.unsupported("preprocessor directive inside function body")
        if tok.text == "{":
            return self.parse_block()
        if tok.text == ";":
            self.next()
            return Empty(span=tok.span)
        if tok.text == "goto":
            raise self.unsupported("goto")
        if tok.text in ("asm", "__asm", "__asm__"):
            raise self.unsupported("inline assembly")
        if tok.text == "if":
            return self._parse_if()
        if tok.text == "while":
            return self._parse_while()
        if tok.text == "do":
            return self._parse_do_while()
        if tok.text == "for":
            return self._parse_for()
        if tok.text == "switch":
            return self._parse_switch()
        if tok.text == "return":
            self.next()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return Return(value=value, span=tok.span)
        if tok.text == "break":
            self.next()
            self.expect(";")
            return Break(span=tok.span)
        if tok.text == "continue":
            self.next()
            self.expect(";")
            return Continue(span=tok.span)
        # Labels are only useful as goto targets.
        if tok.kind == ID and tok.text not in KEYWORDS and self.at(":", 1):
            raise self.unsupported("goto")
        if self._looks_like_declaration():
            return self._parse_declaration()
        expr = self.parse_expr()
        self.expect(";")
        return ExprStmt(expr=expr, span=tok.span)

    def _parse_if(self) -> If:
        span = self.expect("if").span
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_stmt()
        els = None
        if self.at("else"):
            self.next()
            els = self.parse_stmt()
        return If(cond=cond, then=then, els=els, span=span)

    def _parse_while(self) -> While:
        span = self.expect("while").span
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_stmt()
        return While(cond=cond, body=body, span=span)

    def _parse_do_while(self) -> DoWhile:
        span = self.expect("do").span
        body = self.parse_stmt()
        self.expect("while")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        self.expect(";")
        return DoWhile(body=body, cond=cond, span=span)

    def _parse_for(self) -> For:
        span = self.expect("for").span
        self.expect("(")
        init: Optional[Stmt] = None
        if not self.at(";"):
            if self._looks_like_declaration():
                init = self._parse_declaration()
            else:
                expr = self.parse_expr(allow_comma=True)
                self.expect(";")
                init = ExprStmt(expr=expr, span=span)
        else:
            self.next()
        cond = None if self.at(";") else self.parse_expr()
        self.expect(";")
        step = None if self.at(")") else self.parse_expr(allow_comma=True)
        self.expect(")")
        body = self.parse_stmt()
        return For(init=init, cond=cond, step=step, body=body, span=span)

    def _parse_switch(self) -> Switch:
        span = self.expect("switch").span
        self.expect("(")
        value = self.parse_expr()
        self.expect(")")
        self.expect("{")
        cases: List[SwitchCase] = []
        while not self.at("}"):
            if self.at("case") or self.at("default"):
                case_span = self.peek().span
                values: List[Expr] = []
                is_default = False
                while self.at("case") or self.at("default"):
                    if self.at("default"):
                        self.next()
                        self.expect(":")
                        is_default = True
                    else:
                        self.next()
                        values.append(self.parse_expr(no_assign=True))
                        self.expect(":")
                body: List[Stmt] = []
                while not self.at("case") and not self.at("default") and not self.at("}"):
                    body.append(self.parse_stmt())
                cases.append(SwitchCase(values=values, is_default=is_default,
                                        body=body, span=case_span))
            else:
                raise self.error("statements before the first case label")
        self.expect("}")
        return Switch(value=value, cases=cases, span=span)

    def _looks_like_declaration(self) -> bool:
        tok = self.peek()
        if tok.kind != ID:
            return False
        if tok.text in TYPE_KEYWORDS:
            return True
        if tok.text in STMT_KEYWORDS or tok.text in self.declared:
            return False
        # Unknown identifier: 'name name2', possibly with stars between,
        # reads as an opaque-type declaration when followed by a declarator
        # ending.  'a * b;' with undeclared a is taken as a declaration.
        k = 1
        while self.at("*", k):
            k += 1
        nxt = self.peek(k)
        if nxt.kind != ID or nxt.text in KEYWORDS:
            return False
        after = self.peek(k + 1).text
        return after in (";", "=", ",", "[")

    def _parse_declaration(self) -> DeclStmt:
        span = self.peek().span
        type_tokens: List[str] = []
        while True:
            tok = self.peek()
            if tok.kind == ID and (tok.text in TYPE_KEYWORDS or tok.text not in KEYWORDS):
                # Stop once the *next* token ends the declarator head: the
                # final identifier before '*', another identifier, or a
                # declarator terminator is the declared name.
                nxt = self.peek(1)
                if tok.text not in TYPE_KEYWORDS and nxt.text in (";", "=", ",", "[", "("):
                    break
                type_tokens.append(self.next().text)
                continue
            break
        if not type_tokens:
            raise self.error("expected declaration type")
        declarators: List[Declarator] = []
        while True:
            pointer = 0
            while self.at("*"):
                self.next()
                pointer += 1
            name_tok = self.peek()
            if name_tok.kind != ID or name_tok.text in KEYWORDS:
                raise self.error("expected declarator name")
            self.next()
            if self.at("("):
                raise self.error("function declarations inside a body are not supported")
            dims: List[Optional[Expr]] = []
            while self.at("["):
                self.next()
                dims.append(None if self.at("]") else self.parse_expr(no_assign=True))
                self.expect("]")
            init = None
            if self.at("="):
                self.next()
                init = self.parse_expr(no_assign=True)
            self.declared.add(name_tok.text)
            declarators.append(Declarator(name=name_tok.text, pointer=pointer,
                                          array_dims=dims, init=init, span=name_tok.span))
            if self.at(","):
                self.next()
                continue
            self.expect(";")
            return DeclStmt(type_text=" ".join(type_tokens), declarators=declarators, span=span)

    # --- expressions ----------------------------------------------------------

    def parse_expr(self, allow_comma: bool = False, no_assign: bool = False) -> Expr:
        expr = self._parse_assignment() if not no_assign else self._parse_conditional()
        while allow_comma and self.at(","):
            span = self.next().span
            right = self._parse_assignment()
            expr = Comma(left=expr, right=right, span=span)
        return expr

    def _parse_assignment(self) -> Expr:
        left = self._parse_conditional()
        tok = self.peek()
        if tok.text in ASSIGN_OPS:
            self.next()
            right = self._parse_assignment()
            return Assign(op=tok.text, target=left, value=right, span=tok.span)
        return left

    def _parse_conditional(self) -> Expr:
        cond = self._parse_binary(0)
        if self.at("?"):
            span = self.next().span
            then = self._parse_assignment()
            self.expect(":")
            els = self._parse_conditional()
            return Cond(cond=cond, then=then, els=els, span=span)
        return cond

    def _parse_binary(self, level: int) -> Expr:
        if level >= len(_BINARY_LEVELS):
            return self._parse_unary()
        left = self._parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.peek().text in ops and self.peek().kind == PUNCT:
            tok = self.next()
            right = self._parse_binary(level + 1)
            left = Bin(op=tok.text, left=left, right=right, span=tok.span)
        return left

    def _parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.text == "sizeof":
            raise self.unsupported("sizeof")
        if tok.text in ("-", "+", "!", "~", "*", "&"):
            self.next()
            operand = self._parse_unary()
            if tok.text == "+":
                return operand
            if tok.text == "-" and isinstance(operand, Num):
                return Num(value=-operand.value, span=tok.span)
            return Unary(op=tok.text, operand=operand, span=tok.span)
        if tok.text in ("++", "--"):
            self.next()
            operand = self._parse_unary()
            return Unary(op=tok.text, operand=operand, postfix=False, span=tok.span)
        if tok.text == "(" and self._cast_lookahead():
            self.next()
            type_parts = []
            while not self.at(")"):
                type_parts.append(self.next().text)
            self.expect(")")
            operand = self._parse_unary()
            return CastExpr(type_text=" ".join(type_parts), operand=operand, span=tok.span)
        return self._parse_postfix()

    def _cast_lookahead(self) -> bool:
        """Decide whether '(' opens a cast.

        The parenthesized sequence must read as abstract type text:
        identifiers and type keywords followed by optional '*'s, with no
        identifier after a star ('(a * b)' is multiplication, never a cast).
        A leading type keyword decides immediately. A lone unknown
        identifier is a cast only when an expression clearly follows the
        ')'; '(g)(x)' therefore reads as a cast of '(x)' to type g, which
        matches how decompiler output uses such parentheses.
        """
        k = 1
        stars = 0
        idents: List[Token] = []
        first_kw = False
        while True:
            tok = self.peek(k)
            if tok.text == ")":
                break
            if tok.text == "*":
                stars += 1
            elif tok.kind == ID and tok.text in TYPE_KEYWORDS:
                if stars:
                    return False
                if k == 1:
                    first_kw = True
                idents.append(tok)
            elif tok.kind == ID and tok.text not in KEYWORDS:
                if stars:
                    return False  # an identifier after '*' means arithmetic
                idents.append(tok)
            else:
                return False
            k += 1
            if k > 16:
                return False
        if k == 1:
            return False
        if first_kw:
            return True
        if any(t.text in self.declared for t in idents):
            return False  # known variables never name a type here
        if stars:
            return len(idents) > 0
        if len(idents) == 1:
            # A lone unknown identifier: cast only when an expression follows.
            after = self.peek(k + 1)
            return (after.kind in (ID, NUM, STR, CHAR)
                    and after.text not in STMT_KEYWORDS) or after.text == "("
        return len(idents) >= 2

    def _parse_postfix(self) -> Expr:
        expr = self._parse_primary()
        while True:
            tok = self.peek()
            if tok.text == "(":
                self.next()
                args: List[Expr] = []
                while not self.at(")"):
                    args.append(self._parse_assignment())
                    if self.at(","):
                        self.next()
                self.expect(")")
                expr = Call(fn=expr, args=args, span=tok.span)
            elif tok.text == "[":
                self.next()
                index = self.parse_expr()
                self.expect("]")
                expr = Index(base=expr, index=index, span=tok.span)
            elif tok.text in (".", "->"):
                self.next()
                name_tok = self.next()
                if name_tok.kind != ID:
                    raise self.error("expected member name")
                expr = Member(base=expr, name=name_tok.text, arrow=(tok.text == "->"), span=tok.span)
            elif tok.text in ("++", "--"):
                self.next()
                expr = Unary(op=tok.text, operand=expr, postfix=True, span=tok.span)
            else:
                return expr

    def _parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.text == "(":
            self.next()
            expr = self.parse_expr(allow_comma=True)
            self.expect(")")
            return expr
        if tok.kind == NUM:
            self.next()
            return Num(value=tok.value, span=tok.span)
        if tok.kind == STR:
            self.next()
            return Str(value=tok.value, span=tok.span)
        if tok.kind == CHAR:
            self.next()
            return Num(value=tok.value, span=tok.span)
        if tok.kind == ID and tok.text not in KEYWORDS:
            self.next()
            return Name(name=tok.text, span=tok.span)
        raise self.error(f"unexpected token {tok.text!r} in expression")


def _extract_param_name(type_tokens: List[Token]) -> Tuple[Optional[str], List[str]]:
    """Split one parameter's token run into (declared name, type text).

    For a plain parameter the name is the final non-keyword identifier
    (a lone identifier with nothing else is an unnamed opaque type). For a
    function-pointer parameter the name lives inside the first parenthesized
    declarator group, before the prototype's own parameter list.
    """
    first_group = None
    for k, tok in enumerate(type_tokens):
        if tok.text == "(":
            depth = 0
            for j in range(k, len(type_tokens)):
                if type_tokens[j].text == "(":
                    depth += 1
                elif type_tokens[j].text == ")":
                    depth -= 1
                    if depth == 0:
                        first_group = (k, j)
                        break
            break
    if first_group is not None:
        lo, hi = first_group
        for k in range(hi - 1, lo, -1):
            tok = type_tokens[k]
            if tok.kind == ID and tok.text not in KEYWORDS:
                parts = [t.text for t in type_tokens[:k] + type_tokens[k + 1:]]
                return tok.text, parts
        return None, [t.text for t in type_tokens]
    for k in range(len(type_tokens) - 1, -1, -1):
        tok = type_tokens[k]
        if tok.kind == ID and tok.text not in KEYWORDS:
            if k == 0 and len(type_tokens) == 1:
                break
            parts = [t.text for t in type_tokens[:k] + type_tokens[k + 1:]]
            return tok.text, parts
    return None, [t.text for t in type_tokens]


####################
#   Entry points   #
####################

def list_functions(source: str) -> List[Ast]:
    """Parse every function definition in the source text."""
    return _Parser(tokenize(source)).parse_functions()


def parse_function(source: str, function_name: Optional[str] = None) -> Ast:
    """Parse one function out of a C translation unit.

    :param source: C source text containing at least one function definition.
    :param function_name: which function to extract. May be omitted only when
        the source contains exactly one definition.
    :raises SubsetError: on malformed input or excluded constructs.
    """
    functions = list_functions(source)
    if function_name is None:
        if len(functions) == 0:
            raise SubsetError(ErrorKind.PARSE_ERROR, "no function definition found")
        if len(functions) > 1:
            raise SubsetError(ErrorKind.PARSE_ERROR,
                              "multiple functions present; a function name is required")
        return functions[0]
    for fn in functions:
        if fn.name == function_name:
            return fn
    raise SubsetError(ErrorKind.PARSE_ERROR, f"function {function_name!r} not found")


def classify_identifiers(ast: Ast) -> Ast:
    """Resolve every Name node to parameter, local, global, or function.

    Undeclared identifiers that appear only as callees are functions;
    undeclared identifiers used as values anywhere become global variables,
    including ones that are also called (those are function pointer values).
    The pass is deterministic, so both functions of a pair classify the
    same way. Modifies the tree in place and returns it.
    """
    call_only: set = set()
    value_used: set = set()

    def scan_expr(expr: Expr, in_call_position: bool):
        if isinstance(expr, Name):
            (call_only if in_call_position else value_used).add(expr.name)
            return
        if isinstance(expr, Call):
            scan_expr(expr.fn, True)
            for arg in expr.args:
                scan_expr(arg, False)
            return
        for child in _expr_children(expr):
            scan_expr(child, False)

    def scan_stmt(stmt: Stmt):
        for expr in _stmt_exprs(stmt):
            scan_expr(expr, False)
        for sub in _stmt_children(stmt):
            scan_stmt(sub)

    scan_stmt(ast.body)

    param_names = {p.name for p in ast.params if p.name}

    # Scope-aware resolution: walk again with a scope stack so shadowing
    # declarations resolve to their own symbols.
    counter = [0]

    def fresh(name: str) -> str:
        counter[0] += 1
        return f"{name}#{counter[0]}"

    scopes: List[dict] = [{p.name: ("param", p.name) for p in ast.params if p.name}]

    def lookup(name: str):
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        return None

    def annotate_expr(expr: Expr, in_call_position: bool = False):
        if isinstance(expr, Name):
            resolved = lookup(expr.name)
            if resolved is not None:
                expr.kind, expr.symbol = resolved
            elif expr.name in value_used:
                expr.kind, expr.symbol = "global", expr.name
            elif expr.name in call_only:
                expr.kind, expr.symbol = "function", expr.name
            else:
                expr.kind, expr.symbol = "global", expr.name
            return
        if isinstance(expr, Call):
            annotate_expr(expr.fn, True)
            for arg in expr.args:
                annotate_expr(arg)
            return
        for child in _expr_children(expr):
            annotate_expr(child)

    def annotate_stmt(stmt: Stmt):
        if isinstance(stmt, DeclStmt):
            for decl in stmt.declarators:
                if decl.init is not None:
                    annotate_expr(decl.init)
                scopes[-1][decl.name] = ("local", fresh(decl.name))
            return
        if isinstance(stmt, Block):
            scopes.append({})
            for item in stmt.items:
                annotate_stmt(item)
            scopes.pop()
            return
        if isinstance(stmt, For) and isinstance(stmt.init, DeclStmt):
            scopes.append({})
            annotate_stmt(stmt.init)
            for expr in (stmt.cond, stmt.step):
                if expr is not None:
                    annotate_expr(expr)
            annotate_stmt(stmt.body)
            scopes.pop()
            return
        for expr in _stmt_exprs(stmt):
            annotate_expr(expr)
        for sub in _stmt_children(stmt):
            annotate_stmt(sub)

    annotate_stmt(ast.body)
    ast.classified = True
    return ast


def _expr_children(expr: Expr) -> List[Expr]:
    if isinstance(expr, Unary):
        return [expr.operand]
    if isinstance(expr, Bin):
        return [expr.left, expr.right]
    if isinstance(expr, Assign):
        return [expr.target, expr.value]
    if isinstance(expr, Cond):
        return [expr.cond, expr.then, expr.els]
    if isinstance(expr, Call):
        return [expr.fn] + expr.args
    if isinstance(expr, Index):
        return [expr.base, expr.index]
    if isinstance(expr, Member):
        return [expr.base]
    if isinstance(expr, CastExpr):
        return [expr.operand]
    if isinstance(expr, Comma):
        return [expr.left, expr.right]
    return []


def _stmt_exprs(stmt: Stmt) -> List[Expr]:
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, If):
        return [stmt.cond]
    if isinstance(stmt, While):
        return [stmt.cond]
    if isinstance(stmt, DoWhile):
        return [stmt.cond]
    if isinstance(stmt, For):
        return [e for e in (stmt.cond, stmt.step) if e is not None]
    if isinstance(stmt, Switch):
        return [stmt.value] + [v for case in stmt.cases for v in case.values]
    if isinstance(stmt, Return) and stmt.value is not None:
        return [stmt.value]
    if isinstance(stmt, DeclStmt):
        return [d.init for d in stmt.declarators if d.init is not None]
    return []


def _stmt_children(stmt: Stmt) -> List[Stmt]:
    if isinstance(stmt, Block):
        return list(stmt.items)
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.els] if stmt.els is not None else [])
    if isinstance(stmt, While):
        return [stmt.body]
    if isinstance(stmt, DoWhile):
        return [stmt.body]
    if isinstance(stmt, For):
        return ([stmt.init] if stmt.init is not None else []) + [stmt.body]
    if isinstance(stmt, Switch):
        return [s for case in stmt.cases for s in case.body]
    return []


####################
#    Unparser      #
####################

def unparse(ast: Ast) -> str:
    """Render an Ast back to C text.

    Produced mainly for the parse/unparse round-trip property; output is
    fully parenthesized rather than pretty.
    """
    lines: List[str] = []
    params = ", ".join(
        (p.type_text + " " + p.name) if p.name else p.type_text for p in ast.params
    ) or "void"
    lines.append(f"int {ast.name}({params})")
    _unparse_stmt(ast.body, lines, 0)
    return "\n".join(lines) + "\n"


def _indent(depth: int) -> str:
    return "    " * depth


def _unparse_stmt(stmt: Stmt, lines: List[str], depth: int):
    pad = _indent(depth)
    if isinstance(stmt, Block):
        lines.append(pad + "{")
        for item in stmt.items:
            _unparse_stmt(item, lines, depth + 1)
        lines.append(pad + "}")
    elif isinstance(stmt, DeclStmt):
        parts = []
        for d in stmt.declarators:
            text = "*" * d.pointer + d.name
            for dim in d.array_dims:
                text += "[" + (_unparse_expr(dim) if dim is not None else "") + "]"
            if d.init is not None:
                text += " = " + _unparse_expr(d.init)
            parts.append(text)
        lines.append(pad + stmt.type_text + " " + ", ".join(parts) + ";")
    elif isinstance(stmt, ExprStmt):
        lines.append(pad + _unparse_expr(stmt.expr) + ";")
    elif isinstance(stmt, If):
        lines.append(pad + "if (" + _unparse_expr(stmt.cond) + ")")
        _unparse_stmt(_as_block(stmt.then), lines, depth)
        if stmt.els is not None:
            lines.append(pad + "else")
            _unparse_stmt(_as_block(stmt.els), lines, depth)
    elif isinstance(stmt, While):
        lines.append(pad + "while (" + _unparse_expr(stmt.cond) + ")")
        _unparse_stmt(_as_block(stmt.body), lines, depth)
    elif isinstance(stmt, DoWhile):
        lines.append(pad + "do")
        _unparse_stmt(_as_block(stmt.body), lines, depth)
        lines.append(pad + "while (" + _unparse_expr(stmt.cond) + ");")
    elif isinstance(stmt, For):
        init = ""
        if isinstance(stmt.init, DeclStmt):
            tmp: List[str] = []
            _unparse_stmt(stmt.init, tmp, 0)
            init = tmp[0].rstrip(";")
        elif isinstance(stmt.init, ExprStmt):
            init = _unparse_expr(stmt.init.expr)
        cond = _unparse_expr(stmt.cond) if stmt.cond is not None else ""
        step = _unparse_expr(stmt.step) if stmt.step is not None else ""
        lines.append(pad + f"for ({init}; {cond}; {step})")
        _unparse_stmt(_as_block(stmt.body), lines, depth)
    elif isinstance(stmt, Switch):
        lines.append(pad + "switch (" + _unparse_expr(stmt.value) + ")")
        lines.append(pad + "{")
        for case in stmt.cases:
            for v in case.values:
                lines.append(pad + "case " + _unparse_expr(v) + ":")
            if case.is_default:
                lines.append(pad + "default:")
            for s in case.body:
                _unparse_stmt(s, lines, depth + 1)
        lines.append(pad + "}")
    elif isinstance(stmt, Return):
        if stmt.value is None:
            lines.append(pad + "return;")
        else:
            lines.append(pad + "return " + _unparse_expr(stmt.value) + ";")
    elif isinstance(stmt, Break):
        lines.append(pad + "break;")
    elif isinstance(stmt, Continue):
        lines.append(pad + "continue;")
    elif isinstance(stmt, Empty):
        lines.append(pad + ";")
    else:
        raise TypeError(f"cannot unparse {type(stmt)}")


def _as_block(stmt: Stmt) -> Block:
    return stmt if isinstance(stmt, Block) else Block(items=[stmt])


def _unparse_expr(expr: Expr) -> str:
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Str):
        body = "".join(
            chr(b) if 32 <= b < 127 and chr(b) not in '"\\' else f"\\x{b:02x}"
            for b in expr.value
        )
        return '"' + body + '"'
    if isinstance(expr, Unary):
        inner = _unparse_expr(expr.operand)
        return f"({inner}){expr.op}" if expr.postfix else f"{expr.op}({inner})"
    if isinstance(expr, Bin):
        return f"({_unparse_expr(expr.left)} {expr.op} {_unparse_expr(expr.right)})"
    if isinstance(expr, Assign):
        return f"{_unparse_expr(expr.target)} {expr.op} ({_unparse_expr(expr.value)})"
    if isinstance(expr, Cond):
        return (f"(({_unparse_expr(expr.cond)}) ? ({_unparse_expr(expr.then)})"
                f" : ({_unparse_expr(expr.els)}))")
    if isinstance(expr, Call):
        return _postfix_base(expr.fn) + "(" + ", ".join(_unparse_expr(a) for a in expr.args) + ")"
    if isinstance(expr, Index):
        return f"{_postfix_base(expr.base)}[{_unparse_expr(expr.index)}]"
    if isinstance(expr, Member):
        return _postfix_base(expr.base) + ("->" if expr.arrow else ".") + expr.name
    if isinstance(expr, CastExpr):
        return f"({expr.type_text})({_unparse_expr(expr.operand)})"
    if isinstance(expr, Comma):
        return f"{_unparse_expr(expr.left)}, {_unparse_expr(expr.right)}"
    raise TypeError(f"cannot unparse {type(expr)}")


def _postfix_base(expr: Expr) -> str:
    # Postfix operators bind tightest; anything weaker needs parentheses.
    text = _unparse_expr(expr)
    if isinstance(expr, (Name, Num, Str, Member, Index, Call)):
        return text
    return "(" + text + ")"
