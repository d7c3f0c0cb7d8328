"""Complex-valued functions on the vertices of a tree.

Three representations are used:

* ``Sparse``: finitely many nonzero values, zero elsewhere.
* ``Radial``: one value per level up to some depth, then a constant tail.
* ``Rule``: an arbitrary pure evaluator; ``RadialRule`` is the special case
  where the evaluator only looks at the vertex length.

The derivative f'(v) = f(v) - f(b(v)) (with f'(o) = 0) and the backward
composition f ∘ b keep Sparse and Radial inputs in closed form, so the norms
of the named witness functions can be computed exactly.  Operations on a
Sparse function that need to know the children of a vertex take the tree
shape as an argument.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .errors import EvaluationError, TreeDiffError, WeightDomainError
from .tree import TreeShape, Vertex, backward_shift, children, level_order_key, validate
from .weights import Weight


def _finite(z: complex, what: str) -> complex:
    z = complex(z)
    if not (cmath.isfinite(z)):
        raise ValueError(f"{what} must be finite, got {z!r}")
    return z


class TreeFunction:
    radial = False

    def __call__(self, v: Vertex) -> complex:
        return self.evaluate(v)

    def evaluate(self, v: Vertex) -> complex:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Sparse(TreeFunction):
    entries: Mapping[Vertex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for v, z in self.entries.items():
            z = _finite(z, f"value at {v!r}")
            if z != 0:
                clean[tuple(v)] = z
        object.__setattr__(self, "entries", dict(sorted(clean.items(), key=lambda kv: level_order_key(kv[0]))))

    def evaluate(self, v: Vertex) -> complex:
        return self.entries.get(tuple(v), 0j)

    @property
    def support_depth(self) -> int:
        """Largest length of a support vertex, -1 for the zero function."""
        return max((len(v) for v in self.entries), default=-1)

    def validate_for(self, shape: TreeShape) -> None:
        for v in self.entries:
            validate(shape, v)

    def describe(self) -> str:
        if not self.entries:
            return "zero"
        if len(self.entries) == 1:
            ((v, z),) = self.entries.items()
            if z == 1:
                return f"chi:{list(v)}"
        return f"sparse({len(self.entries)} entries)"


@dataclass(frozen=True, eq=True)
class Radial(TreeFunction):
    values: tuple[complex, ...] = ()
    tail: complex = 0j

    radial = True

    def __post_init__(self):
        tail = _finite(self.tail, "tail")
        values = [_finite(z, "radial value") for z in self.values]
        while values and values[-1] == tail:
            values.pop()
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "tail", tail)

    def level_value(self, n: int) -> complex:
        return self.values[n] if n < len(self.values) else self.tail

    def evaluate(self, v: Vertex) -> complex:
        return self.level_value(len(v))

    @property
    def tail_level(self) -> int:
        """First level from which the tail value applies."""
        return len(self.values)

    def describe(self) -> str:
        vals = ",".join(_fmt(z) for z in self.values)
        return f"radial([{vals}], tail={_fmt(self.tail)})"


@dataclass(frozen=True, eq=False)
class Rule(TreeFunction):
    evaluator: Callable[[Vertex], complex]
    description: str = "rule"

    def evaluate(self, v: Vertex) -> complex:
        v = tuple(v)
        try:
            z = complex(self.evaluator(v))
        except WeightDomainError:
            raise
        except EvaluationError as exc:
            if exc.vertex is None:
                exc.vertex = v
            raise
        except Exception as exc:
            raise EvaluationError(f"{self.description} failed at {list(v)}: {exc}", vertex=v) from exc
        if not cmath.isfinite(z):
            raise EvaluationError(f"{self.description} is not finite at {list(v)}", vertex=v)
        return z

    def describe(self) -> str:
        return self.description


@dataclass(frozen=True, eq=False)
class RadialRule(Rule):
    """Rule whose value depends on the vertex only through its length."""

    level_fn: Callable[[int], complex] = None

    radial = True

    def level_value(self, n: int) -> complex:
        return self.evaluate((0,) * n)


def radial_rule(level_fn: Callable[[int], complex], description: str, cls=None, **extra) -> RadialRule:
    cls = cls or RadialRule
    return cls(lambda v: level_fn(len(v)), description, level_fn, **extra)


@dataclass(frozen=True, eq=False)
class AlternatingWitness(RadialRule):
    """g(v) = (-1)^|v| / μ(v); has weighted norm exactly 1."""

    weight: Weight = None


@dataclass(frozen=True, eq=False)
class AlternatingWitnessDerivative(RadialRule):
    """Derivative of the alternating witness; weighted level values are 1 + μ(n)/μ(n-1)."""

    weight: Weight = None


def _fmt(z: complex) -> str:
    if z.imag == 0:
        return repr(z.real)
    return repr(z)


# --- constructors -----------------------------------------------------------


def zero() -> Sparse:
    return Sparse({})


def characteristic(w: Vertex) -> Sparse:
    return Sparse({tuple(w): 1})


def constant(c: complex) -> Radial:
    return Radial((), c)


def hardy_witness() -> Radial:
    """-1 at the root, 1 on level one, 0 elsewhere."""
    return Radial((-1, 1), 0)


def alternating_witness(weight: Weight) -> AlternatingWitness:
    def level_fn(n: int) -> float:
        return (-1) ** n / weight.at(n)

    return radial_rule(level_fn, f"alt-witness[{weight.text()}]", AlternatingWitness, weight=weight)


def evaluate(f: TreeFunction, v: Vertex) -> complex:
    return f.evaluate(v)


# --- operations -------------------------------------------------------------


def derivative(f: TreeFunction, shape: TreeShape | None = None) -> TreeFunction:
    """f'(o) = 0 and f'(v) = f(v) - f(b(v)) elsewhere."""
    if isinstance(f, Sparse):
        if shape is None:
            raise ValueError("the derivative of a sparse function needs the tree shape")
        out: dict[Vertex, complex] = {}
        for w, z in f.entries.items():
            if w:
                out[w] = out.get(w, 0) + z
            for u in children(shape, w):
                out[u] = out.get(u, 0) - z
        return Sparse(out)
    if isinstance(f, Radial):
        levels = [f.level_value(n) for n in range(f.tail_level + 1)]
        return Radial(tuple([0] + [levels[n] - levels[n - 1] for n in range(1, len(levels))]), 0)
    if isinstance(f, RadialRule):

        def level_fn(n: int) -> complex:
            return 0j if n == 0 else f.level_value(n) - f.level_value(n - 1)

        cls = AlternatingWitnessDerivative if isinstance(f, AlternatingWitness) else RadialRule
        extra = {"weight": f.weight} if isinstance(f, AlternatingWitness) else {}
        return radial_rule(level_fn, f"D({f.describe()})", cls, **extra)
    return Rule(lambda v: 0j if not v else f.evaluate(v) - f.evaluate(v[:-1]), f"D({f.describe()})")


def compose(f: TreeFunction, phi: Callable[[Vertex], Vertex], description: str = "phi") -> Rule:
    """The function v ↦ f(φ(v))."""

    def evaluator(v: Vertex) -> complex:
        try:
            image = tuple(phi(v))
        except TreeDiffError:
            raise
        except Exception as exc:
            raise EvaluationError(f"{description} failed at {list(v)}: {exc}", vertex=v) from exc
        return f.evaluate(image)

    return Rule(evaluator, f"{f.describe()}∘{description}")


def compose_backward(f: TreeFunction, shape: TreeShape | None = None) -> TreeFunction:
    """The function v ↦ f(b(v))."""
    if isinstance(f, Radial):
        if not f.values:
            return f
        return Radial((f.values[0],) + f.values, f.tail)
    if isinstance(f, RadialRule):
        return radial_rule(lambda n: f.level_value(max(n - 1, 0)), f"Cb({f.describe()})")
    if isinstance(f, Sparse) and shape is not None:
        out: dict[Vertex, complex] = {}
        for w, z in f.entries.items():
            if not w:
                out[w] = z
            for u in children(shape, w):
                out[u] = z
        return Sparse(out)
    return compose(f, backward_shift, "b")


def scale(alpha: complex, f: TreeFunction) -> TreeFunction:
    alpha = complex(alpha)
    if isinstance(f, Sparse):
        return Sparse({v: alpha * z for v, z in f.entries.items()})
    if isinstance(f, Radial):
        return Radial(tuple(alpha * z for z in f.values), alpha * f.tail)
    if isinstance(f, RadialRule):
        return radial_rule(lambda n: alpha * f.level_value(n), f"{_fmt(alpha)}*{f.describe()}")
    return Rule(lambda v: alpha * f.evaluate(v), f"{_fmt(alpha)}*{f.describe()}")


def linear_combine(alpha: complex, f: TreeFunction, beta: complex, g: TreeFunction) -> TreeFunction:
    """Pointwise αf + βg, staying Sparse or Radial when both inputs are."""
    alpha, beta = complex(alpha), complex(beta)
    if beta == 0:
        return scale(alpha, f)
    if alpha == 0:
        return scale(beta, g)
    if isinstance(f, Sparse) and isinstance(g, Sparse):
        out = {v: alpha * z for v, z in f.entries.items()}
        for v, z in g.entries.items():
            out[v] = out.get(v, 0) + beta * z
        return Sparse(out)
    if isinstance(f, Radial) and isinstance(g, Radial):
        depth = max(f.tail_level, g.tail_level)
        values = tuple(alpha * f.level_value(n) + beta * g.level_value(n) for n in range(depth))
        return Radial(values, alpha * f.tail + beta * g.tail)
    description = f"{_fmt(alpha)}*{f.describe()}+{_fmt(beta)}*{g.describe()}"
    if f.radial and g.radial:
        return radial_rule(lambda n: alpha * f.level_value(n) + beta * g.level_value(n), description)
    return Rule(lambda v: alpha * f.evaluate(v) + beta * g.evaluate(v), description)


# --- serialization ----------------------------------------------------------


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


def _unpair(x: Any) -> complex:
    if isinstance(x, (list, tuple)):
        re, im = x
        return complex(float(re), float(im))
    return complex(float(x))


def to_json(f: TreeFunction) -> dict:
    """JSON form of a Sparse or Radial function."""
    if isinstance(f, Sparse):
        return {
            "kind": "sparse",
            "entries": [{"v": list(v), "re": z.real, "im": z.imag} for v, z in f.entries.items()],
        }
    if isinstance(f, Radial):
        return {"kind": "radial", "values": [_pair(z) for z in f.values], "tail": _pair(f.tail)}
    raise TypeError(f"{f.describe()} has no file representation; only sparse and radial functions do")


def from_json(obj: Mapping[str, Any], params: Mapping[str, float] | None = None) -> TreeFunction:
    kind = obj.get("kind")
    if kind == "sparse":
        return Sparse(
            {tuple(int(i) for i in e["v"]): complex(float(e.get("re", 0)), float(e.get("im", 0))) for e in obj["entries"]}
        )
    if kind == "radial":
        return Radial(tuple(_unpair(x) for x in obj.get("values", [])), _unpair(obj.get("tail", 0)))
    if kind == "expr":
        return expr_function(obj["text"], params)
    raise ValueError(f"unknown function kind {kind!r}")


def expr_function(text: str, params: Mapping[str, float] | None = None) -> RadialRule:
    """Radial function whose level-n value is a DSL expression."""
    from . import expr as dsl

    tree = dsl.parse(text)
    env = dict(params or {})
    missing = dsl.params(tree) - set(env)
    if missing:
        raise EvaluationError(f"expression {text!r} has unbound parameters {sorted(missing)}")
    return radial_rule(lambda n: dsl.eval_radial(tree, n, env), f"expr:{text}")


def parse_address(text: str) -> Vertex:
    text = text.strip()
    if text.startswith("["):
        return tuple(int(i) for i in json.loads(text))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def from_spec(text: str, weight: Weight | None = None, params: Mapping[str, float] | None = None) -> TreeFunction:
    """Build a function from ``chi:<address>``, ``hardy-witness``, ``alt-witness``,
    ``constant:<re>[,<im>]``, ``expr:<dsl>`` or a path to a JSON function file."""
    text = text.strip()
    if text.startswith("chi:"):
        return characteristic(parse_address(text[4:]))
    if text == "hardy-witness":
        return hardy_witness()
    if text == "alt-witness":
        if weight is None:
            raise ValueError("alt-witness needs a weight")
        return alternating_witness(weight)
    if text.startswith("constant:"):
        parts = [float(x) for x in text[9:].split(",")]
        return constant(complex(*parts))
    if text.startswith("expr:"):
        return expr_function(text[5:], params)
    with open(text, encoding="utf-8") as fh:
        return from_json(json.load(fh), params)
