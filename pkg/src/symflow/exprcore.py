"""A small computer-algebra core.

Expressions are immutable, hash-consed DAG nodes: building the same structure
twice returns the same object, so equality is identity and memoised passes
(differentiation, substitution, compilation) share work across common
subtrees.  Operator overloads go through *smart constructors* that fold
constants and apply 0/1 identities as trees are built; the bare node classes
(``Sum``, ``Product``, ...) build raw, unfolded nodes.

Evaluation compiles a DAG to straight-line numpy code, so the same compiled
function accepts scalars or arrays.  Powers with a non-integer exponent need
a positive base; Ln needs a positive argument.  Strict evaluation raises
:class:`~symflow.errors.DomainError` instead of returning NaN.
"""
from __future__ import annotations

import ast
import math
import threading
import weakref
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Union

import numpy as np

from .errors import DomainError, UnboundSymbol

VARIABLES = frozenset({"x", "t", "u", "u_x", "u_t", "psi", "eps", "F", "dF"})

Number = Union[Fraction, float]

_TABLE: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_LOCK = threading.Lock()


def as_number(value) -> Number:
    """Normalise a numeric literal: ints and Fractions stay exact, the rest become float."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise TypeError(f"not a numeric literal: {value!r}")


def is_integer(p: Number) -> bool:
    if isinstance(p, Fraction):
        return p.denominator == 1
    return float(p).is_integer()


def _intern(cls, key, init):
    full = (cls, key)
    with _LOCK:
        obj = _TABLE.get(full)
        if obj is None:
            obj = object.__new__(cls)
            init(obj)
            _TABLE[full] = obj
    return obj


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("__weakref__",)

    children: tuple = ()

    # -- arithmetic sugar (smart constructors) --------------------------------
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, _lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return mul(self, power(_lift(other), -1))

    def __rtruediv__(self, other):
        return mul(_lift(other), power(self, -1))

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __pow__(self, exponent):
        if isinstance(exponent, Const):
            exponent = exponent.value
        if isinstance(exponent, Expr):
            raise TypeError("Power exponents must be numeric; use exp(b*ln(a))")
        return power(self, exponent)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"Expr({to_text(self)})"

    def __reduce__(self):
        return (from_text, (to_text(self),))

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


class Const(Expr):
    __slots__ = ("value",)

    def __new__(cls, value):
        value = as_number(value)

        def init(obj):
            obj.value = value

        return _intern(cls, (type(value), value), init)


class Var(Expr):
    __slots__ = ("name",)

    def __new__(cls, name: str):
        if name not in VARIABLES:
            raise ValueError(f"undeclared variable {name!r}; declared: {sorted(VARIABLES)}")

        def init(obj):
            obj.name = name

        return _intern(cls, name, init)


class Param(Expr):
    """A named real parameter; treated as a constant by differentiation."""

    __slots__ = ("name",)

    def __new__(cls, name: str):
        if name in VARIABLES:
            raise ValueError(f"{name!r} is a variable, not a parameter")

        def init(obj):
            obj.name = name

        return _intern(cls, name, init)


class _Nary(Expr):
    __slots__ = ("children",)

    def __new__(cls, items: Iterable[Expr]):
        items = tuple(_lift(i) for i in items)

        def init(obj):
            obj.children = items

        return _intern(cls, tuple(id(i) for i in items), init)


class Sum(_Nary):
    __slots__ = ()


class Product(_Nary):
    __slots__ = ()


class Power(Expr):
    __slots__ = ("base", "exponent", "children")

    def __new__(cls, base, exponent):
        base = _lift(base)
        exponent = as_number(exponent)

        def init(obj):
            obj.base = base
            obj.exponent = exponent
            obj.children = (base,)

        return _intern(cls, (id(base), type(exponent), exponent), init)


class _Unary(Expr):
    __slots__ = ("arg", "children")

    def __new__(cls, arg):
        arg = _lift(arg)

        def init(obj):
            obj.arg = arg
            obj.children = (arg,)

        return _intern(cls, id(arg), init)


class Exp(_Unary):
    __slots__ = ()


class Ln(_Unary):
    __slots__ = ()


def _lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


X, T, U, UX, UT = Var("x"), Var("t"), Var("u"), Var("u_x"), Var("u_t")
PSI, EPS, FN, DFN = Var("psi"), Var("eps"), Var("F"), Var("dF")


def symbol(name: str) -> Expr:
    return Var(name) if name in VARIABLES else Param(name)


# -- smart constructors -------------------------------------------------------

def _split_coeff(term: Expr) -> tuple[Number, Expr]:
    if isinstance(term, Product) and isinstance(term.children[0], Const):
        rest = term.children[1:]
        return term.children[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), term


def _scale(c: Number, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Product):
        return Product((Const(c),) + rest.children)
    return Product((Const(c), rest))


def add(*terms) -> Expr:
    const: Number = Fraction(0)
    coeffs: dict[Expr, Number] = {}
    stack = [_lift(t) for t in reversed(terms)]
    while stack:
        term = stack.pop()
        if isinstance(term, Sum):
            stack.extend(reversed(term.children))
            continue
        if isinstance(term, Const):
            const = const + term.value
            continue
        c, rest = _split_coeff(term)
        coeffs[rest] = coeffs[rest] + c if rest in coeffs else c
    out = [_scale(c, rest) for rest, c in coeffs.items() if c != 0]
    if const != 0:
        out.append(Const(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Sum(out)


def mul(*factors) -> Expr:
    const: Number = Fraction(1)
    powers: dict[Expr, Number] = {}
    stack = [_lift(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Product):
            stack.extend(reversed(f.children))
            continue
        if isinstance(f, Const):
            const = const * f.value
            continue
        base, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        powers[base] = powers[base] + p if base in powers else p
    if const == 0:
        return ZERO
    out = []
    for base, p in powers.items():
        term = power(base, p)
        if isinstance(term, Const):
            const = const * term.value
        elif isinstance(term, Product):
            for c in term.children:
                if isinstance(c, Const):
                    const = const * c.value
                else:
                    out.append(c)
        else:
            out.append(term)
    if const == 0:
        return ZERO
    if const != 1:
        out.insert(0, Const(const))
    if not out:
        return ONE
    if len(out) == 1:
        return out[0]
    return Product(out)


def power(base, exponent) -> Expr:
    base = _lift(base)
    p = as_number(exponent)
    if p == 0:
        return ONE
    if p == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if v == 0:
            return ZERO if p > 0 else Power(base, p)
        if is_integer(p):
            if isinstance(v, Fraction):
                return Const(v ** int(p))
            return Const(float(v) ** int(p))
        if v > 0:
            return Const(float(v) ** float(p))
        return Power(base, p)
    if isinstance(base, Power) and is_integer(p):
        return power(base.base, base.exponent * p)
    if isinstance(base, Exp):
        return exp(mul(Const(p), base.arg))
    if isinstance(base, Product) and is_integer(p):
        return mul(*(power(c, p) for c in base.children))
    return Power(base, p)


def exp(arg) -> Expr:
    arg = _lift(arg)
    if isinstance(arg, Const):
        return ONE if arg.value == 0 else Const(math.exp(float(arg.value)))
    return Exp(arg)


def ln(arg) -> Expr:
    arg = _lift(arg)
    if isinstance(arg, Const) and arg.value > 0:
        return ZERO if arg.value == 1 else Const(math.log(float(arg.value)))
    if isinstance(arg, Exp):
        return arg.arg
    return Ln(arg)


def sqrt(arg) -> Expr:
    return power(arg, Fraction(1, 2))


def root(arg, n) -> Expr:
    """Real n-th root as a Power; n may be any nonzero rational."""
    return power(arg, 1 / as_number(n))


# -- traversal ----------------------------------------------------------------

def postorder(e: Expr) -> Iterator[Expr]:
    """Yield every distinct node of the DAG, children before parents."""
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(node.children):
            if id(c) not in seen:
                stack.append((c, False))


def _rebuild(node: Expr, kids: list[Expr]) -> Expr:
    if isinstance(node, Sum):
        return add(*kids)
    if isinstance(node, Product):
        return mul(*kids)
    if isinstance(node, Power):
        return power(kids[0], node.exponent)
    if isinstance(node, Exp):
        return exp(kids[0])
    if isinstance(node, Ln):
        return ln(kids[0])
    return node


def substitute_many(e: Expr, mapping: Mapping) -> Expr:
    """Simultaneous capture-free substitution of symbols, then folding."""
    subs = {}
    for k, v in mapping.items():
        key = symbol(k) if isinstance(k, str) else k
        subs[key] = _lift(v)
    done: dict[Expr, Expr] = {}
    for node in postorder(e):
        if node in subs:
            done[node] = subs[node]
        elif node.children:
            done[node] = _rebuild(node, [done[c] for c in node.children])
        else:
            done[node] = node
    return done[e]


def substitute(e: Expr, v, replacement) -> Expr:
    return substitute_many(e, {v: replacement})


def fold(e: Expr) -> Expr:
    """Collapse constant subtrees and apply 0/1 identities throughout."""
    done: dict[Expr, Expr] = {}
    for node in postorder(e):
        if node.children:
            done[node] = _rebuild(node, [done[c] for c in node.children])
        else:
            done[node] = node
    return done[e]


def free_symbols(e: Expr) -> frozenset[str]:
    return frozenset(n.name for n in postorder(e) if isinstance(n, (Var, Param)))


def depends_on(e: Expr, v) -> bool:
    target = symbol(v) if isinstance(v, str) else v
    return any(n is target for n in postorder(e))


def differentiate(e: Expr, v) -> Expr:
    """Exact partial derivative of ``e`` with respect to a variable or parameter ``v``."""
    target = symbol(v) if isinstance(v, str) else v
    if not isinstance(target, (Var, Param)):
        raise TypeError("can only differentiate with respect to a symbol")
    deriv: dict[Expr, Expr] = {}
    for node in postorder(e):
        if node is target:
            deriv[node] = ONE
            continue
        kids = node.children
        if not kids or all(deriv[c] is ZERO for c in kids):
            deriv[node] = ZERO
            continue
        if isinstance(node, Sum):
            deriv[node] = add(*(deriv[c] for c in kids))
        elif isinstance(node, Product):
            terms = []
            for i, c in enumerate(kids):
                dc = deriv[c]
                if dc is ZERO:
                    continue
                terms.append(mul(*kids[:i], dc, *kids[i + 1:]))
            deriv[node] = add(*terms)
        elif isinstance(node, Power):
            p = node.exponent
            deriv[node] = mul(Const(p), power(node.base, p - 1), deriv[node.base])
        elif isinstance(node, Exp):
            deriv[node] = mul(node, deriv[node.arg])
        elif isinstance(node, Ln):
            deriv[node] = mul(power(node.arg, -1), deriv[node.arg])
        else:  # pragma: no cover - every node kind is handled above
            raise TypeError(type(node))
    return deriv[e]


def domain_guards(e: Expr) -> list[tuple[str, Expr]]:
    """Conditions under which ``e`` is real and finite.

    Returns ``(kind, expr)`` pairs with kind ``"pos"`` (must be > 0) or
    ``"nonzero"``.  Integer powers of negative bases are allowed.
    """
    out: list[tuple[str, Expr]] = []
    seen: set[tuple[str, int]] = set()
    for node in postorder(e):
        if isinstance(node, Ln):
            item = ("pos", node.arg)
        elif isinstance(node, Power) and not isinstance(node.base, Const):
            if not is_integer(node.exponent):
                item = ("pos", node.base)
            elif node.exponent < 0:
                item = ("nonzero", node.base)
            else:
                continue
        else:
            continue
        key = (item[0], id(item[1]))
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def node_count(e: Expr) -> int:
    return sum(1 for _ in postorder(e))


# -- evaluation ---------------------------------------------------------------

def _strict_pow(b, p, integral):
    b = np.asarray(b, dtype=float)
    if integral:
        if p < 0 and np.any(b == 0):
            raise DomainError(f"division by zero: 0 ** {p}")
        return np.power(b, int(p))
    if np.any(b < 0) or (p < 0 and np.any(b == 0)):
        raise DomainError(f"real power {p} of a non-positive base")
    return np.power(b, p)


def _strict_ln(a):
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise DomainError("logarithm of a non-positive number")
    return np.log(a)


def _lenient_pow(b, p, integral):
    b = np.asarray(b, dtype=float)
    if integral:
        bad = (b == 0) if p < 0 else np.zeros(b.shape, dtype=bool)
        return np.where(bad, np.nan, np.power(np.where(bad, 1.0, b), int(p)))
    bad = (b < 0) | ((b == 0) if p < 0 else False)
    return np.where(bad, np.nan, np.power(np.where(bad, 1.0, b), p))


def _lenient_ln(a):
    a = np.asarray(a, dtype=float)
    bad = a <= 0
    return np.where(bad, np.nan, np.log(np.where(bad, 1.0, a)))


class Compiled:
    """Straight-line numpy code for one expression DAG."""

    def __init__(self, e: Expr, strict: bool = True):
        self.expr = e
        self.strict = strict
        self.symbols = free_symbols(e)
        names: dict[int, str] = {}
        lines = ["def _f(env):"]
        for sym in sorted(self.symbols):
            lines.append(f"    s_{_ident(sym)} = env[{sym!r}]")
        for i, node in enumerate(postorder(e)):
            name = f"v{i}"
            names[id(node)] = name
            if isinstance(node, Const):
                code = repr(float(node.value))
            elif isinstance(node, (Var, Param)):
                code = f"s_{_ident(node.name)}"
            elif isinstance(node, Sum):
                code = " + ".join(names[id(c)] for c in node.children)
            elif isinstance(node, Product):
                code = " * ".join(names[id(c)] for c in node.children)
            elif isinstance(node, Power):
                b, p = names[id(node.base)], node.exponent
                if p == 2:
                    code = f"{b} * {b}"
                else:
                    code = f"_pow({b}, {float(p)!r}, {is_integer(p)})"
            elif isinstance(node, Exp):
                code = f"_exp({names[id(node.arg)]})"
            elif isinstance(node, Ln):
                code = f"_ln({names[id(node.arg)]})"
            else:  # pragma: no cover
                raise TypeError(type(node))
            lines.append(f"    {name} = {code}")
        lines.append(f"    return {names[id(e)]}")
        namespace = {
            "_pow": _strict_pow if strict else _lenient_pow,
            "_ln": _strict_ln if strict else _lenient_ln,
            "_exp": np.exp,
        }
        exec(compile("\n".join(lines), "<symflow-expr>", "exec"), namespace)
        self._fn: Callable = namespace["_f"]

    def __call__(self, env: Mapping):
        missing = self.symbols - env.keys()
        if missing:
            raise UnboundSymbol(f"unbound symbols: {sorted(missing)}")
        with np.errstate(all="ignore"):
            return self._fn(env)


def _ident(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name)


@lru_cache(maxsize=8192)
def compiled(e: Expr, strict: bool = True) -> Compiled:
    return Compiled(e, strict)


def _normalise_binding(binding: Mapping) -> dict:
    env = {}
    for k, v in binding.items():
        env[k.name if isinstance(k, (Var, Param)) else k] = v
    return env


def evaluate(e: Expr, binding: Mapping | None = None) -> float:
    """Double-precision value of ``e`` at a point; raises DomainError off-domain."""
    value = compiled(e, True)(_normalise_binding(binding or {}))
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"non-finite value {value} (overflow)")
    return value


def evaluate_array(e: Expr, binding: Mapping, strict: bool = True) -> np.ndarray:
    """Vectorised evaluation; with ``strict=False`` off-domain points become NaN."""
    env = _normalise_binding(binding)
    shape = np.broadcast(*[np.asarray(v) for v in env.values()]).shape if env else ()
    out = compiled(e, strict)(env)
    return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()


# -- text form ----------------------------------------------------------------

def _num_text(v: Number) -> str:
    if isinstance(v, Fraction):
        s = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return f"({s})" if (v < 0 or v.denominator != 1) else s
    s = repr(float(v))
    return f"({s})" if v < 0 or "e" in s else s


def to_text(e: Expr) -> str:
    """Fully parenthesised infix form; ``^`` is power."""
    text: dict[int, str] = {}
    for node in postorder(e):
        if isinstance(node, Const):
            s = _num_text(node.value)
        elif isinstance(node, (Var, Param)):
            s = node.name
        elif isinstance(node, Sum):
            s = "(" + " + ".join(text[id(c)] for c in node.children) + ")"
        elif isinstance(node, Product):
            s = "(" + " * ".join(text[id(c)] for c in node.children) + ")"
        elif isinstance(node, Power):
            s = f"({text[id(node.base)]} ^ {_num_text(node.exponent)})"
        elif isinstance(node, Exp):
            s = f"exp({text[id(node.arg)]})"
        else:
            s = f"ln({text[id(node.arg)]})"
        text[id(node)] = s
    return text[id(e)]


_FUNCS = {"exp": exp, "ln": ln, "log": ln, "sqrt": sqrt}


def from_text(source: str) -> Expr:
    """Parse the infix form produced by :func:`to_text` (and hand-written input)."""
    try:
        tree = ast.parse(source.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {source!r}: {exc.msg}") from None
    return _from_ast(tree.body)


def _from_ast(node) -> Expr:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return Const(node.value)
    if isinstance(node, ast.Name):
        return symbol(node.id)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _from_ast(node.operand)
        return mul(MINUS_ONE, inner) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        left = _from_ast(node.left)
        right = _from_ast(node.right)
        if isinstance(node.op, ast.Add):
            return add(left, right)
        if isinstance(node.op, ast.Sub):
            return add(left, mul(MINUS_ONE, right))
        if isinstance(node.op, ast.Mult):
            return mul(left, right)
        if isinstance(node.op, ast.Div):
            return mul(left, power(right, -1))
        if isinstance(node.op, ast.Pow):
            if not isinstance(right, Const):
                raise ValueError("exponent must be a numeric constant")
            return power(left, right.value)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
        return _FUNCS[node.func.id](_from_ast(node.args[0]))
    raise ValueError(f"unsupported syntax in expression: {ast.dump(node)}")
