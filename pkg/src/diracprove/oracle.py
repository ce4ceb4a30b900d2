"""Dense-tensor semantics over small finite dimensions.

This evaluator is deliberately independent of the rewriting machinery: it
interprets elaborated terms directly with numpy.  Definitions are evaluated
from their bodies, functions become Python closures and sums are finite
loops over enumerated basis elements.  It shares only the parser and the
elaborator with the prover.

Labelled values are arrays with one axis per register: codomain registers
in sorted order, then domain registers in sorted order.  Lifting a plain
value to a register tuple reshapes it to one axis per register leaf and
permutes the axes into sorted order; that permutation is the swap.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .terms import Term, from_de_bruijn, is_nameless_binder, numeral_value
from .typecheck import INDEX, STYPE, Context, Typer, register_leaves

MAX_DIM = 4
MAX_ENTRIES = 1 << 20

Shape = Any  # int | tuple[Shape, Shape]


class OracleError(Exception):
    """The oracle cannot evaluate this term (unsupported or too large)."""


@dataclass
class DenseTensor:
    """A value of Dirac type.

    ``kind`` is ``S``, ``K``, ``B``, ``O`` or ``D``.  Plain kets and bras
    are 1-D, operators 2-D, scalars 0-D.  Labelled values carry the sorted
    codomain and domain register names, one axis each.
    """

    kind: str
    data: np.ndarray
    cod: tuple[str, ...] = ()
    dom: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.data.size > MAX_ENTRIES:
            raise OracleError(f"tensor of {self.data.size} entries exceeds the cap")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


@dataclass(frozen=True)
class BasisValue:
    """An element of a finite basis together with the shape it lives in."""

    value: Any
    shape: Any

    @property
    def flat(self) -> int:
        return flat(self.value, self.shape)


def _scalar(z: complex) -> DenseTensor:
    return DenseTensor("S", np.asarray(complex(z)))


# ---------------------------------------------------------------------------
# shapes and basis enumeration


def shape_dim(s: Shape) -> int:
    if isinstance(s, tuple):
        return shape_dim(s[0]) * shape_dim(s[1])
    return s


def _raw_elements(s: Shape) -> list:
    if isinstance(s, tuple):
        return [(a, b) for a in _raw_elements(s[0]) for b in _raw_elements(s[1])]
    return list(range(s))


def elements(s: Shape) -> list[BasisValue]:
    return [BasisValue(v, s) for v in _raw_elements(s)]


def flat(v, s: Shape) -> int:
    if isinstance(s, tuple):
        return flat(v[0], s[0]) * shape_dim(s[1]) + flat(v[1], s[1])
    return v


@dataclass
class Valuation:
    """Index sizes, variable values and basis values for one evaluation.

    ``free`` annotates names that are bound outside the evaluated term (a
    rewrite step inside a sum, say); they are sampled like assumptions.
    """

    index_sizes: dict[str, int] = field(default_factory=dict)
    values: dict[str, Any] = field(default_factory=dict)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    free: dict[str, Term] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, d in self.index_sizes.items():
            if not 1 <= d <= MAX_DIM:
                raise OracleError(f"index {name} has dimension {d}; the cap is {MAX_DIM}")


def _gauss(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# ---------------------------------------------------------------------------
# the evaluator


class Evaluator:
    def __init__(self, ctx: Context, v: Valuation) -> None:
        self.ctx = ctx
        self.v = v
        self._defs: dict[str, Any] = {}

    # -- indices and types ----------------------------------------------------
    def shape(self, s: Term, env: dict) -> Shape:
        if s.head == "BOOL":
            return 2
        if s.head == "PROD":
            return (self.shape(s.args[0], env), self.shape(s.args[1], env))
        if not s.args:
            if s.head in env:
                return env[s.head]
            if s.head in self.v.index_sizes:
                return self.v.index_sizes[s.head]
        raise OracleError(f"unsized index {s}")

    def random_value(self, ty: Term, env: dict) -> Any:
        rng = self.v.rng
        h = ty.head
        if ty == STYPE:
            return _scalar(complex(_gauss(rng, ())))
        if h == "BASIS":
            choices = elements(self.shape(ty.args[0], env))
            return choices[int(rng.integers(len(choices)))]
        if h == "KTYPE":
            return DenseTensor("K", _gauss(rng, shape_dim(self.shape(ty.args[0], env))))
        if h == "BTYPE":
            return DenseTensor("B", _gauss(rng, shape_dim(self.shape(ty.args[0], env))))
        if h == "OTYPE":
            n = shape_dim(self.shape(ty.args[0], env))
            m = shape_dim(self.shape(ty.args[1], env))
            return DenseTensor("O", _gauss(rng, (n, m)))
        if h == "SET":
            # a random non-empty subset, in basis order
            choices = elements(self.shape(ty.args[0], env))
            keep = rng.random(len(choices)) < 0.5
            keep[int(rng.integers(len(choices)))] = True
            return [x for x, k in zip(choices, keep) if k]
        if h == "ARROW" and ty.args[0].head == "BASIS":
            table: dict = {}
            cod = ty.args[1]

            env_copy = dict(env)

            def fn(arg, _table=table, _cod=cod, _env=env_copy):
                key = arg
                if key not in _table:
                    _table[key] = self.random_value(_cod, _env)
                return _table[key]

            return fn
        raise OracleError(f"cannot sample a value of type {ty}")

    # -- lookup -------------------------------------------------------------
    def lookup(self, name: str, env: dict) -> Any:
        if name in env:
            return env[name]
        if name in self.v.values:
            return self.v.values[name]
        if name in self.v.free:
            val = self.random_value(self.v.free[name], {})
            self.v.values[name] = val
            return val
        entry = self.ctx.get(name)
        if entry is None:
            raise OracleError(f"unknown variable {name}")
        if entry.kind == "def":
            if name not in self._defs:
                self._defs[name] = self.ev(entry.body, {})
            return self._defs[name]
        if entry.kind == "assum":
            val = self.random_value(entry.type, {})
            self.v.values[name] = val
            return val
        raise OracleError(f"{name} is not a value")

    def register_shape(self, leaf: str) -> Shape:
        entry = self.ctx.get(leaf)
        if entry is None or entry.kind != "register":
            raise OracleError(f"unknown register {leaf}")
        return self.shape(entry.type.args[0], {})

    # -- main recursion -----------------------------------------------------
    def ev(self, t: Term, env: dict) -> Any:
        h, a = t.head, t.args
        if not a:
            v = numeral_value(t)
            if v is not None:
                return _scalar(complex(v))
            if h == "IMAG":
                return _scalar(1j)
            if h == "SQRT2":
                return _scalar(np.sqrt(2))
            return self.lookup(h, env)
        method = getattr(self, "_e_" + h, None)
        if method is None:
            raise OracleError(f"no semantics for {h}")
        return method(t, a, env)

    def basis_value(self, t: Term, env: dict) -> BasisValue:
        if t.head == "PAIR":
            x = self.basis_value(t.args[0], env)
            y = self.basis_value(t.args[1], env)
            return BasisValue((x.value, y.value), (x.shape, y.shape))
        if not t.args and t.head in ("0", "1"):
            return BasisValue(int(t.head), 2)
        val = self.ev(t, env)
        if not isinstance(val, BasisValue):
            raise OracleError(f"{t} is not a basis value")
        return val

    # scalars
    def _e_ADDS(self, t, a, env):
        return _scalar(sum(complex(self.ev(x, env).data) for x in a))

    def _e_MULS(self, t, a, env):
        out = 1 + 0j
        for x in a:
            out *= complex(self.ev(x, env).data)
        return _scalar(out)

    def _e_CONJ(self, t, a, env):
        return _scalar(np.conj(complex(self.ev(a[0], env).data)))

    def _e_DELTA(self, t, a, env):
        return _scalar(1.0 if self.basis_value(a[0], env) == self.basis_value(a[1], env) else 0.0)

    def _e_DOT(self, t, a, env):
        b = self.ev(a[0], env)
        k = self.ev(a[1], env)
        return _scalar(complex(b.data @ k.data))

    # constants
    def _one_hot(self, t, env, kind):
        b = self.basis_value(t.args[0], env)
        vec = np.zeros(shape_dim(b.shape), dtype=complex)
        vec[b.flat] = 1
        return DenseTensor(kind, vec)

    def _e_KET(self, t, a, env):
        return self._one_hot(t, env, "K")

    def _e_BRA(self, t, a, env):
        return self._one_hot(t, env, "B")

    def _e_ZEROK(self, t, a, env):
        return DenseTensor("K", np.zeros(shape_dim(self.shape(a[0], env)), dtype=complex))

    def _e_ZEROB(self, t, a, env):
        return DenseTensor("B", np.zeros(shape_dim(self.shape(a[0], env)), dtype=complex))

    def _e_ZEROO(self, t, a, env):
        n, m = shape_dim(self.shape(a[0], env)), shape_dim(self.shape(a[1], env))
        return DenseTensor("O", np.zeros((n, m), dtype=complex))

    def _e_ZEROD(self, t, a, env):
        cod = tuple(sorted(r.head for r in a[0].args))
        dom = tuple(sorted(r.head for r in a[1].args))
        dims = [shape_dim(self.register_shape(r)) for r in cod + dom]
        return DenseTensor("D", np.zeros(dims, dtype=complex), cod, dom)

    def _e_ONEO(self, t, a, env):
        return DenseTensor("O", np.eye(shape_dim(self.shape(a[0], env)), dtype=complex))

    # linear structure
    def _e_ADJ(self, t, a, env):
        x = self.ev(a[0], env)
        if x.kind == "S":
            return _scalar(np.conj(complex(x.data)))
        if x.kind in ("K", "B"):
            return DenseTensor("B" if x.kind == "K" else "K", np.conj(x.data))
        if x.kind == "O":
            return DenseTensor("O", np.conj(x.data.T))
        nc, nd = len(x.cod), len(x.dom)
        perm = list(range(nc, nc + nd)) + list(range(nc))
        return DenseTensor("D", np.conj(np.transpose(x.data, perm)), x.dom, x.cod)

    def _e_SCR(self, t, a, env):
        c = complex(self.ev(a[0], env).data)
        x = self.ev(a[1], env)
        return DenseTensor(x.kind, c * x.data, x.cod, x.dom)

    def _e_ADD(self, t, a, env):
        xs = [self.ev(x, env) for x in a]
        first = xs[0]
        data = first.data.copy()
        for x in xs[1:]:
            if x.data.shape != data.shape or x.cod != first.cod or x.dom != first.dom:
                raise OracleError("summands have different shapes")
            data = data + x.data
        return DenseTensor(first.kind, data, first.cod, first.dom)

    def _e_TSR(self, t, a, env):
        x, y = self.ev(a[0], env), self.ev(a[1], env)
        return DenseTensor(x.kind, np.kron(x.data, y.data))

    def _e_OUTER(self, t, a, env):
        k, b = self.ev(a[0], env), self.ev(a[1], env)
        return DenseTensor("O", np.outer(k.data, b.data))

    def _e_MULK(self, t, a, env):
        o, k = self.ev(a[0], env), self.ev(a[1], env)
        return DenseTensor("K", o.data @ k.data)

    def _e_MULB(self, t, a, env):
        b, o = self.ev(a[0], env), self.ev(a[1], env)
        return DenseTensor("B", b.data @ o.data)

    def _e_MULO(self, t, a, env):
        o1, o2 = self.ev(a[0], env), self.ev(a[1], env)
        return DenseTensor("O", o1.data @ o2.data)

    # sets and sums
    def _e_USET(self, t, a, env):
        return elements(self.shape(a[0], env))

    def _e_CATPROD(self, t, a, env):
        return [BasisValue((x.value, y.value), (x.shape, y.shape))
                for x in self.ev(a[0], env) for y in self.ev(a[1], env)]

    def _e_SUM(self, t, a, env):
        items = self.ev(a[0], env)
        f = a[1]
        name, body = f.args[0].head, f.args[2]
        total = None
        for x in items:
            val = self.ev(body, {**env, name: x})
            if isinstance(val, DenseTensor) and val.kind == "D" and not val.cod and not val.dom:
                val = _scalar(complex(val.data))
            if total is None:
                total = DenseTensor(val.kind, val.data.copy(), val.cod, val.dom)
            else:
                total = DenseTensor(total.kind, total.data + val.data, total.cod, total.dom)
        if total is None:
            raise OracleError("sum over an empty set has no shape")
        return total

    # functions
    def _e_FUN(self, t, a, env):
        name, body = a[0].head, a[2]

        def fn(arg, _env=env):
            return self.ev(body, {**_env, name: arg})

        return fn

    def _e_IDX(self, t, a, env):
        name, body = a[0].head, a[1]

        def fn(shape, _env=env):
            return self.ev(body, {**_env, name: shape})

        return fn

    def _e_APPLY(self, t, a, env):
        f = self.ev(a[0], env)
        if not callable(f):
            raise OracleError(f"cannot apply {a[0]}")
        arg = a[1]
        if self._is_index_term(arg, env):
            return f(self.shape(arg, env))
        if arg.head == "PAIR" or (not arg.args and arg.head in ("0", "1")):
            return f(self.basis_value(arg, env))
        return f(self.ev(arg, env))

    def _is_index_term(self, s: Term, env: dict) -> bool:
        if s.head in ("BOOL", "PROD"):
            return True
        if s.args:
            return False
        if s.head in env:
            return _is_shape(env[s.head])
        e = self.ctx.get(s.head)
        return e is not None and e.kind == "index"

    # labelled values
    def _labelled_basis(self, t, a, env, role):
        leaf = a[1].head
        s = self.register_shape(leaf)
        b = self.basis_value(a[0], env)
        if b.shape != s:
            raise OracleError(f"basis value of shape {b.shape} on register {leaf}")
        vec = np.zeros(shape_dim(s), dtype=complex)
        vec[b.flat] = 1
        if role == "cod":
            return DenseTensor("D", vec, (leaf,), ())
        return DenseTensor("D", vec, (), (leaf,))

    def _e_LKET(self, t, a, env):
        return self._labelled_basis(t, a, env, "cod")

    def _e_LBRA(self, t, a, env):
        return self._labelled_basis(t, a, env, "dom")

    def _lift(self, data: np.ndarray, cod_reg: Term | None, dom_reg: Term | None) -> DenseTensor:
        cod_leaves = register_leaves(cod_reg) if cod_reg is not None else []
        dom_leaves = register_leaves(dom_reg) if dom_reg is not None else []
        dims = [shape_dim(self.register_shape(r)) for r in cod_leaves + dom_leaves]
        arr = data.reshape(dims) if dims else data
        cod_perm = sorted(range(len(cod_leaves)), key=lambda k: cod_leaves[k])
        dom_perm = sorted(range(len(dom_leaves)), key=lambda k: dom_leaves[k])
        perm = cod_perm + [len(cod_leaves) + k for k in dom_perm]
        arr = np.transpose(arr, perm)
        return DenseTensor("D", arr, tuple(sorted(cod_leaves)), tuple(sorted(dom_leaves)))

    def _e_LIFTK(self, t, a, env):
        return self._lift(self.ev(a[0], env).data, a[1], None)

    def _e_LIFTB(self, t, a, env):
        return self._lift(self.ev(a[0], env).data, None, a[1])

    def _e_LIFTO(self, t, a, env):
        return self._lift(self.ev(a[0], env).data, a[1], a[2])

    def _as_labelled(self, x: DenseTensor) -> DenseTensor:
        if x.kind == "S":
            return DenseTensor("D", x.data)
        return x

    def _e_LTSR(self, t, a, env):
        xs = [self._as_labelled(self.ev(x, env)) for x in a]
        out = xs[0]
        for y in xs[1:]:
            out = _contract(out, y, tensor_only=True)
        return out

    def _e_LDOT(self, t, a, env):
        x = self._as_labelled(self.ev(a[0], env))
        y = self._as_labelled(self.ev(a[1], env))
        return _contract(x, y)


def _is_shape(v) -> bool:
    if isinstance(v, tuple):
        return len(v) == 2 and all(_is_shape(x) for x in v)
    return isinstance(v, int) and not isinstance(v, bool)


def _contract(x: DenseTensor, y: DenseTensor, tensor_only: bool = False) -> DenseTensor:
    """Generalised composition ``x . y`` of labelled tensors.

    Domain registers of ``x`` that are codomain registers of ``y`` are
    contracted; every other axis passes through (the identity padding).
    With ``tensor_only`` nothing is contracted: a ket and a bra on the
    same register side by side form an operator on that register.
    """
    letters = iter(string.ascii_letters)
    shared = [] if tensor_only else [r for r in x.dom if r in y.cod]
    lab: dict[tuple[str, str, str], str] = {}
    for r in shared:
        lab[("x", "dom", r)] = lab[("y", "cod", r)] = next(letters)
    for r in x.cod:
        lab[("x", "cod", r)] = next(letters)
    for r in x.dom:
        lab.setdefault(("x", "dom", r), next(letters))
    for r in y.cod:
        lab.setdefault(("y", "cod", r), next(letters))
    for r in y.dom:
        lab[("y", "dom", r)] = next(letters)
    xs = "".join(lab[("x", "cod", r)] for r in x.cod) + "".join(lab[("x", "dom", r)] for r in x.dom)
    ys = "".join(lab[("y", "cod", r)] for r in y.cod) + "".join(lab[("y", "dom", r)] for r in y.dom)
    out_cod: dict[str, str] = {}
    out_dom: dict[str, str] = {}
    for r in x.cod:
        out_cod[r] = lab[("x", "cod", r)]
    for r in y.cod:
        if r not in shared:
            if r in out_cod:
                raise OracleError(f"register {r} appears twice in the codomain")
            out_cod[r] = lab[("y", "cod", r)]
    for r in y.dom:
        out_dom[r] = lab[("y", "dom", r)]
    for r in x.dom:
        if r not in shared:
            if r in out_dom:
                raise OracleError(f"register {r} appears twice in the domain")
            out_dom[r] = lab[("x", "dom", r)]
    cod = tuple(sorted(out_cod))
    dom = tuple(sorted(out_dom))
    outs = "".join(out_cod[r] for r in cod) + "".join(out_dom[r] for r in dom)
    data = np.einsum(f"{xs},{ys}->{outs}", x.data, y.data)
    return DenseTensor("D", np.asarray(data), cod, dom)


# ---------------------------------------------------------------------------
# public API


def random_valuation(
    ctx: Context,
    rng: np.random.Generator,
    dims: tuple[int, ...] = (2, 3),
    free: Mapping[str, Term] | None = None,
) -> Valuation:
    sizes = {e.name: int(rng.choice(dims)) for e in ctx.entries if e.kind == "index"}
    free = dict(free or {})
    for name, ann in list(free.items()):
        if ann == INDEX:
            sizes[name] = int(rng.choice(dims))
            del free[name]
    return Valuation(sizes, {}, rng, free)


def _prepare(ctx: Context, t: Term, free: Mapping[str, Term]) -> Term:
    if _has_nameless(t):
        t = from_de_bruijn(t)
    typer = Typer(ctx)
    for name, ann in free.items():
        typer.declare_bound(name, ann)
    return typer.elaborate(t)[0]


def _has_nameless(t: Term) -> bool:
    stack = [t]
    while stack:
        u = stack.pop()
        if u.args and is_nameless_binder(u):
            return True
        stack.extend(u.args)
    return False


def evaluate(ctx: Context, v: Valuation, t: Term) -> DenseTensor:
    """Dense value of ``t`` (surface, elaborated or de Bruijn) under ``v``."""
    free = {**v.free, **{n: INDEX for n in v.index_sizes if n not in ctx}}
    val = Evaluator(ctx, v).ev(_prepare(ctx, t, free), {})
    if not isinstance(val, DenseTensor):
        raise OracleError("the term does not denote a tensor")
    if val.kind == "D" and not val.cod and not val.dom:
        return _scalar(complex(val.data))
    return val


def max_difference(a: DenseTensor, b: DenseTensor) -> float:
    if a.kind == "S" and b.kind == "S":
        return float(abs(complex(a.data) - complex(b.data)))
    if a.data.shape != b.data.shape or a.cod != b.cod or a.dom != b.dom:
        return float("inf")
    return float(np.max(np.abs(a.data - b.data))) if a.data.size else 0.0


def semantic_equal(
    ctx: Context,
    t1: Term,
    t2: Term,
    trials: int = 3,
    tol: float = 1e-9,
    seed: int = 0,
    dims: tuple[int, ...] = (2, 3),
    free: Mapping[str, Term] | None = None,
) -> bool:
    """True iff ``t1`` and ``t2`` agree on ``trials`` random valuations.

    Equality is checked on random samples, so a ``True`` answer is
    evidence, not proof; a ``False`` answer is a definite counterexample.
    Each trial draws its own stream from ``seed``.  ``free`` gives the
    annotations of names bound outside both terms.
    """
    streams = np.random.SeedSequence(seed).spawn(trials)
    for ss in streams:
        v = random_valuation(ctx, np.random.default_rng(ss), dims, free)
        a = evaluate(ctx, v, t1)
        v2 = Valuation(dict(v.index_sizes), v.values, v.rng, v.free)
        b = evaluate(ctx, v2, t2)
        if max_difference(a, b) > tol * max(1.0, float(np.max(np.abs(a.data))) if a.data.size else 1.0):
            return False
    return True


def swap_matrix(source: tuple[str, ...], dims: dict[str, int]) -> np.ndarray:
    """Permutation matrix taking the ``source`` register order to sorted order."""
    target = tuple(sorted(source))
    sizes = [dims[r] for r in source]
    n = int(np.prod(sizes)) if sizes else 1
    out = np.zeros((n, n))
    for idx in itertools.product(*[range(d) for d in sizes]):
        pos = dict(zip(source, idx))
        src = np.ravel_multi_index(idx, sizes) if sizes else 0
        tgt_idx = tuple(pos[r] for r in target)
        tgt = np.ravel_multi_index(tgt_idx, [dims[r] for r in target]) if sizes else 0
        out[tgt, src] = 1
    return out


__all__ = [
    "BasisValue",
    "DenseTensor",
    "OracleError",
    "Valuation",
    "evaluate",
    "max_difference",
    "random_valuation",
    "semantic_equal",
    "swap_matrix",
]
