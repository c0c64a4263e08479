"""Plain-text key-value experiment configuration.

Grammar (one entry per line)::

    file    := { line }
    line    := [ key "=" value ] [ "#" comment ]
    key     := identifier from KEYS
    value   := text up to the comment, surrounding blanks stripped

Value syntax per key:

    suite              one of suites.SUITES
    window             [a, b]   or   [a, b] x [c, d]   (numbers below)
    density            expression; default 1 (Lebesgue)
    levy               poisson | telegraph | gamma | discrete(s1:w1, s2:w2, ...)
    epsilon            number in [0, 1), Gamma truncation level (default 1/1000)
    quadrature_order   positive integer
    seed, samples, threads, n, m, configs, vectors   non-negative integers
    T, c               numbers
    phi, psi           expression
    functions, eta     expressions separated by ";"
    out                path
    format             json | csv

Numbers are integers (exact), p/q fractions (exact) or decimal floats.
Expressions use x (and y in two dimensions), + - * /, ** with a non-negative
integer literal exponent, and the calls indicator(a, b, h),
indicator((a1, a2), (b1, b2), h), bump(c, r, A), log1p, log1m, ratio,
recip1p, exp.  ``ExperimentSpec.to_text`` writes a canonical form that
parses back to an equal spec.
"""
from __future__ import annotations

import ast
import dataclasses
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError, DomainError
from .functions import Bump, Indicator, TestFunction, constant, coordinate, exp, fmt_number, log1m, log1p, ratio, recip1p
from .measures import FiniteDiscrete, GammaLevy, IntensityMeasure
from .window import Window

INT_KEYS = ("seed", "samples", "threads", "n", "m", "configs", "vectors", "quadrature_order")
NUM_KEYS = ("epsilon", "T", "c")
EXPR_KEYS = ("density", "phi", "psi")
LIST_KEYS = ("functions", "eta")
KEYS = ("suite", "window", "density", "levy", "epsilon", "quadrature_order", "seed", "samples", "threads",
        "n", "m", "configs", "vectors", "T", "c", "phi", "psi", "functions", "eta", "out", "format")

_MAPS = {"log1p": log1p, "log1m": log1m, "ratio": ratio, "recip1p": recip1p, "exp": exp}


@dataclass
class ExperimentSpec:
    suite: str | None = None
    window: Window | None = None
    density: TestFunction | None = None
    levy: object = None
    epsilon: object = None
    quadrature_order: int | None = None
    seed: int | None = None
    samples: int | None = None
    threads: int | None = None
    n: int | None = None
    m: int | None = None
    configs: int | None = None
    vectors: int | None = None
    T: object = None
    c: object = None
    phi: TestFunction | None = None
    psi: TestFunction | None = None
    functions: tuple | None = None
    eta: tuple | None = None
    out: str | None = None
    format: str | None = None
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def intensity(self, default_window=None) -> IntensityMeasure:
        w = self.window or default_window
        kw = {} if self.quadrature_order is None else {"order": self.quadrature_order}
        return IntensityMeasure(w, self.density, **kw)

    def levy_measure(self):
        """The jump law, with the Gamma truncation level applied."""
        if self.levy == "gamma":
            return GammaLevy(float(self.epsilon) if self.epsilon is not None else 1e-3)
        return self.levy

    def to_text(self) -> str:
        out = []
        for k in KEYS:
            v = getattr(self, k)
            if v is None:
                continue
            out.append(f"{k} = {format_value(k, v)}")
        return "\n".join(out) + "\n"


def format_value(key, v) -> str:
    if key == "window":
        return str(v)
    if key == "levy":
        return v if isinstance(v, str) else str(v)
    if key in EXPR_KEYS:
        return v.to_expr()
    if key in LIST_KEYS:
        return "; ".join(f.to_expr() for f in v)
    if key in NUM_KEYS:
        return fmt_number(v)
    return str(v)


# ---------------------------------------------------------------------------
# expressions


class _ExprError(Exception):
    def __init__(self, message, offset=0):
        super().__init__(message)
        self.offset = offset


def _is_num(v):
    return isinstance(v, (Fraction, float))


def _num(node):
    v = _eval(node, 1)
    if not _is_num(v):
        raise _ExprError("expected a number", node.col_offset)
    return v


def _point(node, dim):
    if dim == 1:
        return _num(node)
    if not isinstance(node, ast.Tuple) or len(node.elts) != dim:
        raise _ExprError(f"expected a {dim}-tuple", node.col_offset)
    return tuple(_num(e) for e in node.elts)


def _eval(node, dim):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise _ExprError("unsupported literal", node.col_offset)
        return Fraction(node.value) if isinstance(node.value, int) else float(node.value)
    if isinstance(node, ast.Name):
        axes = ("x", "y")[:dim]
        if node.id not in axes:
            raise _ExprError(f"unknown name {node.id!r}", node.col_offset)
        return coordinate(axes.index(node.id), dim)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand, dim)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and type(node.right.value) is int and node.right.value >= 0):
                raise _ExprError("exponent must be a non-negative integer literal", node.right.col_offset)
            base = _eval(node.left, dim)
            return base ** node.right.value
        a, b = _eval(node.left, dim), _eval(node.right, dim)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            if not _is_num(b):
                raise _ExprError("division by a function is not supported", node.right.col_offset)
            if b == 0:
                raise _ExprError("division by zero", node.right.col_offset)
            if _is_num(a):
                return a / b
            return (1 / b) * a
        raise _ExprError("unsupported operator", node.col_offset)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name, args = node.func.id, node.args
        try:
            if name == "indicator":
                if len(args) != 3:
                    raise _ExprError("indicator takes (lo, hi, height)", node.col_offset)
                return Indicator(_point(args[0], dim), _point(args[1], dim), _num(args[2]))
            if name == "bump":
                if len(args) != 3:
                    raise _ExprError("bump takes (center, radius, amplitude)", node.col_offset)
                return Bump(_point(args[0], dim), _num(args[1]), _num(args[2]))
            if name in _MAPS:
                if len(args) != 1:
                    raise _ExprError(f"{name} takes one argument", node.col_offset)
                inner = _eval(args[0], dim)
                if _is_num(inner):
                    inner = constant(inner, dim)
                return _MAPS[name](inner)
        except (ValueError, TypeError) as e:
            if isinstance(e, _ExprError):
                raise
            raise _ExprError(str(e), node.col_offset) from None
        raise _ExprError(f"unknown function {name!r}", node.col_offset)
    raise _ExprError("unsupported syntax", getattr(node, "col_offset", 0))


def parse_expression(text: str, dim: int = 1, line=None, column=1):
    """Parse an expression into a TestFunction (numbers become constants)."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"syntax error in expression: {e.msg}", line, column + max((e.offset or 1) - 1, 0)) from None
    try:
        v = _eval(tree.body, dim)
    except _ExprError as e:
        raise ConfigError(str(e), line, column + e.offset) from None
    return constant(v, dim) if _is_num(v) else v


def parse_number(text, line=None, column=1):
    try:
        tree = ast.parse(text.strip(), mode="eval")
        return _num(tree.body)
    except SyntaxError:
        raise ConfigError(f"not a number: {text.strip()!r}", line, column) from None
    except _ExprError as e:
        raise ConfigError(str(e), line, column + e.offset) from None


_WINDOW_RE = re.compile(r"\[([^\[\]]*)\]")


def parse_window(text, line=None, column=1) -> Window:
    parts = [p.strip() for p in text.split(" x ")]
    bounds = []
    for p in parts:
        m = _WINDOW_RE.fullmatch(p)
        if not m or m.group(1).count(",") != 1:
            raise ConfigError(f"window must be [a, b] or [a, b] x [c, d], got {text!r}", line, column)
        lo, hi = (parse_number(s, line, column) for s in m.group(1).split(","))
        bounds.append((lo, hi))
    try:
        return Window(tuple(bounds))
    except (ValueError, DomainError) as e:
        raise ConfigError(str(e), line, column) from None


def parse_levy(text, line=None, column=1):
    t = text.strip()
    if t == "poisson":
        return FiniteDiscrete.unit()
    if t == "telegraph":
        return FiniteDiscrete.telegraph()
    if t == "gamma":
        return "gamma"
    m = re.fullmatch(r"discrete\((.*)\)", t)
    if m:
        atoms = []
        for item in m.group(1).split(","):
            if item.count(":") != 1:
                raise ConfigError(f"discrete atoms are written s:w, got {item.strip()!r}", line, column)
            s, w = item.split(":")
            atoms.append((float(parse_number(s, line, column)), float(parse_number(w, line, column))))
        try:
            return FiniteDiscrete(tuple(atoms))
        except (ValueError, DomainError) as e:
            raise ConfigError(str(e), line, column) from None
    raise ConfigError(f"unknown levy measure {t!r} (poisson, telegraph, gamma, discrete(...))", line, column)


def _split_line(raw):
    # strip a trailing comment; '#' never occurs inside values
    body = raw.split("#", 1)[0]
    return body


def parse_config(text: str) -> ExperimentSpec:
    """Parse configuration text; raises ConfigError with 1-based line and column."""
    from .suites import SUITES

    raw = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = _split_line(line)
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ConfigError("expected key = value", ln, col)
        k, v = body.split("=", 1)
        key = k.strip()
        kcol = len(k) - len(k.lstrip()) + 1
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", ln, kcol)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", ln, kcol)
        vcol = len(k) + 2 + (len(v) - len(v.lstrip()))
        if not v.strip():
            raise ConfigError(f"missing value for {key!r}", ln, vcol)
        raw[key] = (v.strip(), ln, vcol)

    spec = ExperimentSpec()
    spec.lines = {k: ln for k, (_, ln, _) in raw.items()}
    if "window" in raw:
        spec.window = parse_window(*raw["window"])
    dim = spec.window.dim if spec.window is not None else 1
    for key, (v, ln, col) in raw.items():
        if key == "window":
            continue
        if key == "suite":
            if v not in SUITES:
                raise ConfigError(f"unknown suite {v!r}", ln, col)
            spec.suite = v
        elif key == "levy":
            spec.levy = parse_levy(v, ln, col)
        elif key in INT_KEYS:
            if not re.fullmatch(r"\d+", v):
                raise ConfigError(f"{key} must be a non-negative integer", ln, col)
            setattr(spec, key, int(v))
        elif key in NUM_KEYS:
            setattr(spec, key, parse_number(v, ln, col))
        elif key in EXPR_KEYS:
            setattr(spec, key, parse_expression(v, dim, ln, col))
        elif key in LIST_KEYS:
            items, off = [], 0
            for part in v.split(";"):
                lead = len(part) - len(part.lstrip())
                if not part.strip():
                    raise ConfigError(f"empty item in {key}", ln, col + off)
                items.append(parse_expression(part, dim, ln, col + off + lead))
                off += len(part) + 1
            setattr(spec, key, tuple(items))
        elif key == "format":
            if v not in ("json", "csv"):
                raise ConfigError("format must be json or csv", ln, col)
            spec.format = v
        elif key == "out":
            spec.out = v
    _validate(spec, raw)
    return spec


def _validate(spec, raw):
    def err(key, msg):
        _, ln, col = raw[key]
        raise ConfigError(msg, ln, col)

    if spec.epsilon is not None and not 0 <= spec.epsilon < 1:
        err("epsilon", "epsilon must lie in [0, 1)")
    if spec.quadrature_order is not None and spec.quadrature_order < 1:
        err("quadrature_order", "quadrature_order must be positive")
    if spec.samples is not None and spec.samples < 2:
        err("samples", "samples must be at least 2")
    if spec.threads is not None and spec.threads < 1:
        err("threads", "threads must be at least 1")
    if spec.density is not None and spec.window is not None:
        try:
            spec.intensity()
        except DomainError as e:
            err("density", str(e))
    if spec.window is not None:
        for key in EXPR_KEYS + LIST_KEYS:
            v = getattr(spec, key)
            for f in (v if isinstance(v, tuple) else (v,)) if v is not None else ():
                if f.dim != spec.window.dim:
                    err(key, "function dimension does not match the window")


def load_config(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def replace(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    """Copy with the given fields overridden (None values are ignored)."""
    return dataclasses.replace(spec, **{k: v for k, v in changes.items() if v is not None})
