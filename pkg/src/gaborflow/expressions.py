"""Hamiltonian expression parser and forward-mode second-order derivatives.

Grammar: standard precedence with right-associative '^' binding tighter than
unary minus, then '*' '/', then '+' '-'; parentheses; variables x1..xn,
p1..pn and t; functions sin, cos, exp, sqrt.  Errors carry byte offsets and
the expected-token set.

Evaluation runs on dual numbers that carry the value, the gradient with
respect to z = (x, p), and the full Hessian, so derivatives are exact to
rounding for the supported operations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import Hamiltonian
from .errors import GaborflowError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


class ParseError(GaborflowError, ValueError):
    def __init__(self, message: str, offset: int, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class EvalDomainError(GaborflowError, ArithmeticError):
    def __init__(self, message: str, span):
        self.span = span
        super().__init__(f"{message} in expression span {span[0]}..{span[1]}")


@dataclass(frozen=True)
class Const:
    value: float
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Var:
    kind: str        # "x", "p", or "t"
    index: int       # 0-based, unused for t
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Unary:
    op: str          # "neg" or a function name
    arg: object
    span: tuple = (0, 0)


@dataclass(frozen=True)
class Binary:
    op: str          # + - * / ^
    left: object
    right: object
    span: tuple = (0, 0)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_OPS = "+-*/^()"


def _tokenize(src: str):
    tokens = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < len(src) and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                seen_dot = seen_dot or src[j] == "."
                j += 1
            if j < len(src) and src[j] in "eE":
                k = j + 1
                if k < len(src) and src[k] in "+-":
                    k += 1
                if k < len(src) and src[k].isdigit():
                    j = k
                    while j < len(src) and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i, ("number",)) from None
            tokens.append(("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i, ("number", "identifier", "operator"))
    tokens.append(("end", "", len(src)))
    return tokens


# ---------------------------------------------------------------------------
# Pratt parser
# ---------------------------------------------------------------------------

_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BINDING = 30


class _Parser:
    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], (kind,))
        return self.advance()

    def parse(self):
        ast = self.expression(0)
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], ("operator", "end of input"))
        return ast

    def expression(self, min_bp: int):
        node = self.prefix()
        while True:
            kind, _, _ = self.peek()
            bp = _BINDING.get(kind)
            if bp is None or bp < min_bp:
                return node
            op = self.advance()[0]
            # '^' is right-associative
            rhs = self.expression(bp if op == "^" else bp + 1)
            node = Binary(op, node, rhs, (node.span[0], rhs.span[1]))

    def prefix(self):
        kind, text, off = self.peek()
        if kind == "num":
            self.advance()
            return Const(float(text), (off, off + len(text)))
        if kind == "-":
            self.advance()
            arg = self.expression(_UNARY_BINDING)
            return Unary("neg", arg, (off, arg.span[1]))
        if kind == "(":
            self.advance()
            node = self.expression(0)
            closing = self.expect(")")
            return replace(node, span=(off, closing[2] + 1))
        if kind == "ident":
            self.advance()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                closing = self.expect(")")
                return Unary(text, arg, (off, closing[2] + 1))
            return self.variable(text, off)
        raise ParseError(f"unexpected token {text!r}" if text else "unexpected end of input",
                         off, ("number", "identifier", "(", "-"))

    def variable(self, name: str, off: int):
        span = (off, off + len(name))
        if name == "t":
            return Var("t", 0, span)
        if name and name[0] in ("x", "p") and name[1:].isdigit():
            idx = int(name[1:])
            if not 1 <= idx <= self.n:
                raise ParseError(f"variable {name!r} outside dimension n={self.n}", off,
                                 (f"x1..x{self.n}", f"p1..p{self.n}", "t"))
            return Var(name[0], idx - 1, span)
        raise ParseError(f"unknown identifier {name!r}", off,
                         (f"x1..x{self.n}", f"p1..p{self.n}", "t") + FUNCTIONS)


def parse_hamiltonian(src: str, n: int):
    """Parse an expression in x1..xn, p1..pn, t into an AST."""
    if n < 1:
        raise ParseError("dimension must be >= 1", 0)
    return _Parser(src, n).parse()


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through the parser)
# ---------------------------------------------------------------------------

def _precedence(node) -> int:
    if isinstance(node, Binary):
        return _BINDING[node.op]
    if isinstance(node, Unary):
        return _UNARY_BINDING if node.op == "neg" else 100
    if isinstance(node, Const) and node.value < 0:
        return _UNARY_BINDING
    return 100


def to_source(node) -> str:
    """Render an AST back to parseable source."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return "t" if node.kind == "t" else f"{node.kind}{node.index + 1}"
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = to_source(node.arg)
            if _precedence(node.arg) < _UNARY_BINDING:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({to_source(node.arg)})"
    if isinstance(node, Binary):
        bp = _BINDING[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        if node.op == "^":
            if _precedence(node.left) <= bp:
                left = f"({left})"
            if _precedence(node.right) < bp:
                right = f"({right})"
        else:
            if _precedence(node.left) < bp:
                left = f"({left})"
            if _precedence(node.right) < bp or (
                node.op in ("-", "/") and _precedence(node.right) == bp
            ):
                right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Second-order forward-mode duals
# ---------------------------------------------------------------------------

class Dual:
    """Value with gradient and Hessian with respect to z."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value: float, dim: int) -> "Dual":
        return cls(value, np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def seed(cls, value: float, index: int, dim: int) -> "Dual":
        grad = np.zeros(dim)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((dim, dim)))

    def __add__(self, other):
        return Dual(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    def __sub__(self, other):
        return Dual(self.val - other.val, self.grad - other.grad, self.hess - other.hess)

    def __neg__(self):
        return Dual(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        outer = np.outer(self.grad, other.grad)
        return Dual(
            self.val * other.val,
            self.val * other.grad + other.val * self.grad,
            self.val * other.hess + other.val * self.hess + outer + outer.T,
        )

    def chain(self, f, fp, fpp):
        """Apply a scalar function with derivatives fp, fpp at self.val."""
        outer = np.outer(self.grad, self.grad)
        return Dual(f, fp * self.grad, fp * self.hess + fpp * outer)


def _dual_div(a: Dual, b: Dual, span) -> Dual:
    if b.val == 0.0:
        raise EvalDomainError("division by zero", span)
    val = a.val / b.val
    grad = (a.grad - val * b.grad) / b.val
    cross = np.outer(grad, b.grad)
    hess = (a.hess - cross - cross.T - val * b.hess) / b.val
    return Dual(val, grad, hess)


def _dual_pow(a: Dual, b: Dual, b_node, span) -> Dual:
    is_const_exp = isinstance(b_node, Const) or (
        isinstance(b_node, Unary) and b_node.op == "neg" and isinstance(b_node.arg, Const)
    )
    if is_const_exp and float(b.val).is_integer():
        k = b.val
        if k == 0.0:
            return Dual.constant(1.0, a.grad.size)
        if a.val == 0.0 and k < 0:
            raise EvalDomainError("zero raised to a negative power", span)
        f = a.val**k
        fp = k * a.val ** (k - 1) if a.val != 0.0 or k >= 1 else 0.0
        fpp = k * (k - 1) * a.val ** (k - 2) if a.val != 0.0 or k >= 2 else 0.0
        return a.chain(f, fp, fpp)
    if a.val <= 0.0:
        raise EvalDomainError("non-integer power requires a positive base", span)
    # a^b = exp(b log a)
    log_a = a.chain(np.log(a.val), 1.0 / a.val, -1.0 / a.val**2)
    return (b * log_a).chain(*_exp_derivs(b.val * np.log(a.val)))


def _exp_derivs(x: float):
    e = np.exp(x)
    return e, e, e


def _eval_dual(node, z: np.ndarray, t: float, n: int) -> Dual:
    dim = 2 * n
    if isinstance(node, Const):
        return Dual.constant(node.value, dim)
    if isinstance(node, Var):
        if node.kind == "t":
            return Dual.constant(t, dim)
        index = node.index if node.kind == "x" else n + node.index
        return Dual.seed(z[index], index, dim)
    if isinstance(node, Unary):
        if node.op == "neg":
            return -_eval_dual(node.arg, z, t, n)
        arg = _eval_dual(node.arg, z, t, n)
        if node.op == "sin":
            return arg.chain(np.sin(arg.val), np.cos(arg.val), -np.sin(arg.val))
        if node.op == "cos":
            return arg.chain(np.cos(arg.val), -np.sin(arg.val), -np.cos(arg.val))
        if node.op == "exp":
            return arg.chain(*_exp_derivs(arg.val))
        if node.op == "sqrt":
            if arg.val <= 0.0:
                raise EvalDomainError("square root of a non-positive value", node.span)
            r = np.sqrt(arg.val)
            return arg.chain(r, 0.5 / r, -0.25 / (arg.val * r))
        raise TypeError(f"unknown unary op {node.op!r}")
    if isinstance(node, Binary):
        left = _eval_dual(node.left, z, t, n)
        if node.op == "^":
            right = _eval_dual(node.right, z, t, n)
            return _dual_pow(left, right, node.right, node.span)
        right = _eval_dual(node.right, z, t, n)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return _dual_div(left, right, node.span)
        raise TypeError(f"unknown binary op {node.op!r}")
    raise TypeError(f"not an AST node: {node!r}")


def eval_with_derivatives(ast, z, t: float, n: int):
    """Evaluate an AST at z = (x, p) and time t.

    Returns (value, gradient, hessian) with derivatives taken with respect to
    z; the Hessian is symmetric by construction.
    """
    z = np.asarray(z, dtype=float).ravel()
    dual = _eval_dual(ast, z, t, n)
    return dual.val, dual.grad, dual.hess


def expression_hamiltonian(src: str, n: int) -> Hamiltonian:
    """Compile an expression into a Hamiltonian with exact derivatives."""
    ast = parse_hamiltonian(src, n)

    def walk(node, pred):
        if pred(node):
            return True
        if isinstance(node, Unary):
            return walk(node.arg, pred)
        if isinstance(node, Binary):
            return walk(node.left, pred) or walk(node.right, pred)
        return False

    time_dependent = walk(ast, lambda nd: isinstance(nd, Var) and nd.kind == "t")

    return Hamiltonian(
        n,
        value=lambda z, t: _eval_dual(ast, np.asarray(z, dtype=float), t, n).val,
        gradient=lambda z, t: _eval_dual(ast, np.asarray(z, dtype=float), t, n).grad,
        hessian=lambda z, t: _eval_dual(ast, np.asarray(z, dtype=float), t, n).hess,
        autonomous=not time_dependent,
        name=src,
    )
