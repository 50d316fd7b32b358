"""Genetic-programming symbolic regression with protected operators.

Expression trees live in a compact node arena.  Evaluation is total: divide
by zero yields 1, log of a non-positive yields 0, square roots of negatives
yield 0, the power operator uses the absolute base, and every node output is
clamped to [-1e12, 1e12], so no tree ever produces NaN or infinity.

The search keeps a Pareto archive over (node count, mean squared error);
archived constants are refined by coordinate-wise golden-section search.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DomainError, ParseError, ValidationError
from .metrics import r_squared
from .rng import Rng

CLAMP = 1.0e12
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
UNARY_OPS = ("sqrt", "exp", "log", "abs")
ALL_OPS = BINARY_OPS + UNARY_OPS

_OP_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Node:
    op: str  # operator name, "const", or "feat"
    a: int = -1
    b: int = -1
    value: float = 0.0  # constant value or feature index


@dataclass(frozen=True)
class ExpressionTree:
    """Arena-encoded expression over named dataset features."""

    nodes: tuple[Node, ...]
    root: int
    feature_names: tuple[str, ...]

    def __post_init__(self):
        seen = set()

        def walk(i: int, depth: int):
            if depth > len(self.nodes):
                raise ValidationError("expression tree contains a cycle")
            if i < 0 or i >= len(self.nodes):
                raise ValidationError("child index out of range")
            seen.add(i)
            node = self.nodes[i]
            if node.op in BINARY_OPS:
                walk(node.a, depth + 1)
                walk(node.b, depth + 1)
            elif node.op in UNARY_OPS:
                walk(node.a, depth + 1)
            elif node.op == "feat":
                if not 0 <= int(node.value) < len(self.feature_names):
                    raise ValidationError("feature reference out of range")
            elif node.op != "const":
                raise ValidationError(f"unknown node op {node.op!r}")

        walk(self.root, 0)
        if len(seen) != len(self.nodes):
            raise ValidationError("arena contains unreachable nodes")


def _protected_div(a, b):
    return np.where(b == 0.0, 1.0, a / np.where(b == 0.0, 1.0, b))


def _protected_pow(a, b):
    with np.errstate(all="ignore"):
        out = np.power(np.abs(a), b)
    return np.nan_to_num(out, nan=0.0, posinf=CLAMP, neginf=-CLAMP)


def _clamp(x):
    return np.clip(x, -CLAMP, CLAMP)


def eval_expression(t: ExpressionTree, row_or_matrix) -> np.ndarray | float:
    """Evaluate over one row (returns float) or an (n, p) matrix."""
    X = np.asarray(row_or_matrix, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]

    def ev(i: int):
        node = t.nodes[i]
        op = node.op
        if op == "const":
            return np.full(X.shape[0], node.value)
        if op == "feat":
            return X[:, int(node.value)]
        with np.errstate(all="ignore"):
            if op == "add":
                out = ev(node.a) + ev(node.b)
            elif op == "sub":
                out = ev(node.a) - ev(node.b)
            elif op == "mul":
                out = ev(node.a) * ev(node.b)
            elif op == "div":
                out = _protected_div(ev(node.a), ev(node.b))
            elif op == "pow":
                out = _protected_pow(ev(node.a), ev(node.b))
            elif op == "sqrt":
                arg = ev(node.a)
                out = np.where(arg < 0.0, 0.0, np.sqrt(np.abs(arg)))
            elif op == "exp":
                out = np.exp(np.minimum(ev(node.a), 700.0))
            elif op == "log":
                arg = ev(node.a)
                out = np.where(arg <= 0.0, 0.0, np.log(np.where(arg <= 0.0, 1.0, arg)))
            else:  # abs
                out = np.abs(ev(node.a))
        return _clamp(np.nan_to_num(out, nan=0.0, posinf=CLAMP, neginf=-CLAMP))

    result = ev(t.root)
    return float(result[0]) if single else result


def complexity(t: ExpressionTree) -> int:
    return len(t.nodes)


# ---------------------------------------------------------------------------
# Text round-trip


def expression_to_string(t: ExpressionTree) -> str:
    def render(i: int) -> str:
        node = t.nodes[i]
        if node.op == "const":
            # negative literals are parenthesized so "^" keeps its operand
            return repr(node.value) if node.value >= 0 else f"({node.value!r})"
        if node.op == "feat":
            return t.feature_names[int(node.value)]
        if node.op in BINARY_OPS:
            return f"({render(node.a)} {_OP_SYMBOL[node.op]} {render(node.b)})"
        return f"{node.op}({render(node.a)})"

    return render(t.root)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def parse_expression(text: str, feature_names) -> ExpressionTree:
    """Parse infix text with ^ for power; precedence ^ over * / over + -."""
    feature_names = tuple(feature_names)
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))

    nodes: list[Node] = []

    def emit(node: Node) -> int:
        nodes.append(node)
        return len(nodes) - 1

    cursor = 0

    def peek():
        return tokens[cursor]

    def advance():
        nonlocal cursor
        tok = tokens[cursor]
        cursor += 1
        return tok

    def expect(value: str):
        kind, val, at = advance()
        if val != value:
            raise ParseError(f"expected {value!r} at position {at}, found {val!r}")

    def parse_expr() -> int:
        left = parse_term()
        while peek()[1] in ("+", "-"):
            op = advance()[1]
            right = parse_term()
            left = emit(Node("add" if op == "+" else "sub", a=left, b=right))
        return left

    def parse_term() -> int:
        left = parse_unary()
        while peek()[1] in ("*", "/"):
            op = advance()[1]
            right = parse_unary()
            left = emit(Node("mul" if op == "*" else "div", a=left, b=right))
        return left

    def parse_unary() -> int:
        if peek()[1] == "-":
            at = advance()[2]
            inner = parse_unary()
            if nodes[inner].op == "const" and nodes[inner].a == -1:
                nodes[inner] = Node("const", value=-nodes[inner].value)
                return inner
            zero = emit(Node("const", value=0.0))
            return emit(Node("sub", a=zero, b=inner))
        return parse_power()

    def parse_power() -> int:
        base = parse_atom()
        if peek()[1] == "^":
            advance()
            exponent = parse_unary()  # right-associative
            return emit(Node("pow", a=base, b=exponent))
        return base

    def parse_atom() -> int:
        kind, val, at = advance()
        if kind == "num":
            return emit(Node("const", value=float(val)))
        if kind == "ident":
            if val in UNARY_OPS:
                expect("(")
                inner = parse_expr()
                expect(")")
                return emit(Node(val, a=inner))
            if val in feature_names:
                return emit(Node("feat", value=float(feature_names.index(val))))
            raise ParseError(f"unknown identifier {val!r} at position {at}")
        if val == "(":
            inner = parse_expr()
            expect(")")
            return inner
        raise ParseError(f"unexpected token {val!r} at position {at}")

    root = parse_expr()
    kind, val, at = peek()
    if kind != "end":
        raise ParseError(f"trailing input {val!r} at position {at}")
    return _compact(nodes, root, feature_names)


def _compact(nodes: list[Node], root: int, feature_names) -> ExpressionTree:
    """Copy only reachable nodes, renumbering children."""
    out: list[Node] = []

    def copy(i: int) -> int:
        node = nodes[i]
        if node.op in BINARY_OPS:
            a = copy(node.a)
            b = copy(node.b)
            out.append(Node(node.op, a=a, b=b))
        elif node.op in UNARY_OPS:
            a = copy(node.a)
            out.append(Node(node.op, a=a))
        else:
            out.append(node)
        return len(out) - 1

    new_root = copy(root)
    return ExpressionTree(
        nodes=tuple(out), root=new_root, feature_names=tuple(feature_names)
    )


def tree_from_nested(nested, feature_names) -> ExpressionTree:
    """Build from nested tuples: ("add", left, right), ("feat", j), ("const", v)."""
    nodes: list[Node] = []

    def build(item) -> int:
        op = item[0]
        if op == "const":
            nodes.append(Node("const", value=float(item[1])))
        elif op == "feat":
            nodes.append(Node("feat", value=float(item[1])))
        elif op in BINARY_OPS:
            a = build(item[1])
            b = build(item[2])
            nodes.append(Node(op, a=a, b=b))
        elif op in UNARY_OPS:
            a = build(item[1])
            nodes.append(Node(op, a=a))
        else:
            raise ValidationError(f"unknown op {op!r}")
        return len(nodes) - 1

    root = build(nested)
    return ExpressionTree(nodes=tuple(nodes), root=root, feature_names=tuple(feature_names))


# ---------------------------------------------------------------------------
# GP search


@dataclass(frozen=True)
class GpConfig:
    population: int = 500
    generations: int = 40
    max_nodes: int = 30
    operators: tuple[str, ...] = ALL_OPS
    crossover_rate: float = 0.7
    mutation_rate: float = 0.2
    parsimony: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.population < 10:
            raise ValidationError("population must be at least 10")
        if self.max_nodes < 3:
            raise ValidationError("max_nodes must be at least 3")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValidationError("rates must lie in [0, 1]")
        unknown = set(self.operators) - set(ALL_OPS)
        if unknown:
            raise ValidationError(f"unknown operators: {sorted(unknown)}")


@dataclass(frozen=True)
class ArchiveEntry:
    tree: ExpressionTree
    complexity: int
    mse: float


@dataclass(frozen=True)
class ParetoArchive:
    """Non-dominated (complexity, mse) expressions, complexity ascending."""

    entries: tuple[ArchiveEntry, ...]

    def best_by_mse(self) -> ArchiveEntry:
        return min(self.entries, key=lambda e: (e.mse, e.complexity))

    def to_json_dict(self, d: Dataset | None = None) -> dict:
        rows = []
        for e in self.entries:
            row = {
                "complexity": e.complexity,
                "mse": e.mse,
                "expression": expression_to_string(e.tree),
            }
            if d is not None and d.n_rows >= 2:
                try:
                    row["r2"] = r_squared(d.y, eval_expression(e.tree, d.X))
                except DomainError:
                    row["r2"] = None
            rows.append(row)
        return {"entries": rows}


def _offer(entries: list[ArchiveEntry], candidate: ArchiveEntry) -> None:
    """Insert candidate unless dominated; drop entries it dominates."""
    for e in entries:
        if (e.complexity <= candidate.complexity and e.mse <= candidate.mse) and (
            e.complexity < candidate.complexity or e.mse < candidate.mse
        ):
            return
        if e.complexity == candidate.complexity and e.mse == candidate.mse:
            return
    entries[:] = [
        e
        for e in entries
        if not (
            (candidate.complexity <= e.complexity and candidate.mse <= e.mse)
            and (candidate.complexity < e.complexity or candidate.mse < e.mse)
        )
    ]
    entries.append(candidate)
    entries.sort(key=lambda e: (e.complexity, e.mse))


class _Gp:
    def __init__(self, d: Dataset, cfg: GpConfig):
        if d.n_rows == 0:
            raise DomainError("symbolic regression needs a non-empty dataset")
        self.X = d.X
        self.y = d.y
        self.names = tuple(d.feature_names)
        self.p = d.n_features
        self.cfg = cfg
        self.rng = Rng(cfg.seed).derive("gp")
        self.binary = tuple(op for op in cfg.operators if op in BINARY_OPS)
        self.unary = tuple(op for op in cfg.operators if op in UNARY_OPS)

    def mse(self, tree: ExpressionTree) -> float:
        pred = eval_expression(tree, self.X)
        err = pred - self.y
        return float(np.mean(err * err))

    def scaled_fit(self, tree: ExpressionTree) -> tuple[float, float, float]:
        """Least-squares affine wrapper: (mse, a, b) minimizing |a*t(x)+b - y|^2."""
        u = eval_expression(tree, self.X)
        if u.ndim == 0:
            u = np.full(self.y.shape, float(u))
        design = np.column_stack([np.ones_like(u), u])
        try:
            beta, *_ = np.linalg.lstsq(design, self.y, rcond=None)
        except np.linalg.LinAlgError:
            return self.mse(tree), 1.0, 0.0
        if not np.all(np.isfinite(beta)):
            return self.mse(tree), 1.0, 0.0
        resid = design @ beta - self.y
        return float(np.mean(resid * resid)), float(beta[1]), float(beta[0])

    def wrap_affine(self, tree: ExpressionTree, a: float, b: float) -> ExpressionTree:
        nested = ("add", ("mul", ("const", a), self._nested(tree)), ("const", b))
        return tree_from_nested(nested, self.names)

    # -- random trees ------------------------------------------------------

    def _leaf(self) -> tuple:
        if self.rng.random() < 0.6:
            return ("feat", self.rng.integers(self.p))
        return ("const", round(self.rng.uniform(-10.0, 10.0), 4))

    def _grow(self, depth: int) -> tuple:
        if depth <= 0 or (depth < 3 and self.rng.random() < 0.3):
            return self._leaf()
        ops = self.binary + self.unary
        op = ops[self.rng.integers(len(ops))]
        if op in BINARY_OPS:
            return (op, self._grow(depth - 1), self._grow(depth - 1))
        return (op, self._grow(depth - 1))

    def random_tree(self, max_depth: int = 4) -> ExpressionTree:
        depth = self.rng.integers(max_depth + 1)
        for _ in range(10):
            t = tree_from_nested(self._grow(depth), self.names)
            if complexity(t) <= self.cfg.max_nodes:
                return t
            depth = max(0, depth - 1)
        return tree_from_nested(self._leaf(), self.names)

    # -- variation ---------------------------------------------------------

    def _nested(self, t: ExpressionTree, i: int | None = None):
        node = t.nodes[t.root if i is None else i]
        if node.op == "const":
            return ("const", node.value)
        if node.op == "feat":
            return ("feat", int(node.value))
        if node.op in BINARY_OPS:
            return (node.op, self._nested(t, node.a), self._nested(t, node.b))
        return (node.op, self._nested(t, node.a))

    def _splice(self, nested, path: tuple, replacement):
        if not path:
            return replacement
        head, *rest = path
        parts = list(nested)
        parts[head] = self._splice(parts[head], tuple(rest), replacement)
        return tuple(parts)

    def _paths(self, nested, prefix=()):
        yield prefix, nested
        if nested[0] in BINARY_OPS:
            yield from self._paths(nested[1], prefix + (1,))
            yield from self._paths(nested[2], prefix + (2,))
        elif nested[0] in UNARY_OPS:
            yield from self._paths(nested[1], prefix + (1,))

    def _random_path(self, nested) -> tuple:
        paths = [p for p, _ in self._paths(nested)]
        return paths[self.rng.integers(len(paths))]

    def crossover(self, a: ExpressionTree, b: ExpressionTree) -> ExpressionTree:
        na, nb = self._nested(a), self._nested(b)
        pa = self._random_path(na)
        pb = self._random_path(nb)
        donor = nb
        for step in pb:
            donor = donor[step]
        child = tree_from_nested(self._splice(na, pa, donor), self.names)
        return child if complexity(child) <= self.cfg.max_nodes else a

    def mutate(self, t: ExpressionTree) -> ExpressionTree:
        nested = self._nested(t)
        kind = self.rng.integers(4)
        if kind == 0:  # subtree replacement
            path = self._random_path(nested)
            child = tree_from_nested(
                self._splice(nested, path, self._grow(2)), self.names
            )
            return child if complexity(child) <= self.cfg.max_nodes else t
        if kind == 3:  # node insertion: wrap a subtree with op(+const operand)
            path = self._random_path(nested)
            target = nested
            for step in path:
                target = target[step]
            const = ("const", round(self.rng.uniform(-3.0, 3.0), 4))
            choices = []
            for op in self.binary:
                choices.append((op, target, const))
                choices.append((op, const, target))
            for op in self.unary:
                choices.append((op, target))
            if not choices:
                return t
            wrapped = choices[self.rng.integers(len(choices))]
            child = tree_from_nested(
                self._splice(nested, path, wrapped), self.names
            )
            return child if complexity(child) <= self.cfg.max_nodes else t
        if kind == 1:  # constant jitter
            consts = [p for p, sub in self._paths(nested) if sub[0] == "const"]
            if not consts:
                return t
            path = consts[self.rng.integers(len(consts))]
            target = nested
            for step in path:
                target = target[step]
            new = target[1] + self.rng.normal() * (abs(target[1]) * 0.5 + 0.1)
            return tree_from_nested(
                self._splice(nested, path, ("const", new)), self.names
            )
        # operator swap, same arity
        ops = [
            (p, sub)
            for p, sub in self._paths(nested)
            if sub[0] in BINARY_OPS or sub[0] in UNARY_OPS
        ]
        if not ops:
            return t
        path, sub = ops[self.rng.integers(len(ops))]
        pool = self.binary if sub[0] in BINARY_OPS else self.unary
        if len(pool) <= 1:
            return t
        new_op = pool[self.rng.integers(len(pool))]
        return tree_from_nested(
            self._splice(nested, path, (new_op,) + tuple(sub[1:])), self.names
        )

    # -- constant refinement -------------------------------------------------

    def refine_constants(self, tree: ExpressionTree, iterations: int = 20) -> ExpressionTree:
        nested = self._nested(tree)
        const_paths = [p for p, sub in self._paths(nested) if sub[0] == "const"]
        if not const_paths:
            return tree
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        for path in const_paths:
            target = nested
            for step in path:
                target = target[step]
            center = target[1]
            span = max(1.0, 2.0 * abs(center))
            lo, hi = center - span, center + span

            def mse_at(c):
                return self.mse(
                    tree_from_nested(self._splice(nested, path, ("const", c)), self.names)
                )

            x1 = hi - golden * (hi - lo)
            x2 = lo + golden * (hi - lo)
            f1, f2 = mse_at(x1), mse_at(x2)
            for _ in range(iterations):
                if f1 <= f2:
                    hi, x2, f2 = x2, x1, f1
                    x1 = hi - golden * (hi - lo)
                    f1 = mse_at(x1)
                else:
                    lo, x1, f1 = x1, x2, f2
                    x2 = lo + golden * (hi - lo)
                    f2 = mse_at(x2)
            best_c = x1 if f1 <= f2 else x2
            if min(f1, f2) < mse_at(center):
                nested = self._splice(nested, path, ("const", best_c))
        return tree_from_nested(nested, self.names)


def _dominance_ranks(comp: np.ndarray, mse: np.ndarray) -> np.ndarray:
    n = comp.size
    le_c = comp[:, None] <= comp[None, :]
    le_m = mse[:, None] <= mse[None, :]
    strict = (comp[:, None] < comp[None, :]) | (mse[:, None] < mse[None, :])
    dominates = le_c & le_m & strict  # [i, j] True when i dominates j
    ranks = np.full(n, -1)
    alive = np.ones(n, dtype=bool)
    rank = 0
    while alive.any():
        dominated = (dominates & alive[:, None]).any(axis=0)
        front = alive & ~dominated
        if not front.any():  # duplicates guard
            front = alive
        ranks[front] = rank
        alive &= ~front
        rank += 1
    return ranks


def gp_search(d: Dataset, cfg: GpConfig = GpConfig()) -> ParetoArchive:
    """Evolve expressions, maintaining a (complexity, mse) Pareto archive.

    Selection is a size-3 tournament on lexicographic (dominance rank,
    mse + parsimony * complexity); survivors are truncated from the
    parent+offspring union by the same key, so the full first front
    persists across generations.  Fitness uses least-squares affine scaling,
    and both the raw tree and its affine-wrapped form are offered to the
    archive, each at the mse its own evaluation actually achieves.
    """
    gp = _Gp(d, cfg)
    population = [gp.random_tree() for _ in range(cfg.population)]
    archive: list[ArchiveEntry] = []

    def evaluate(trees):
        comp = np.empty(len(trees))
        errs = np.empty(len(trees))
        for i, t in enumerate(trees):
            c = complexity(t)
            raw = gp.mse(t)
            scaled, a, b = gp.scaled_fit(t)
            comp[i] = c
            errs[i] = min(raw, scaled)
            _offer(archive, ArchiveEntry(tree=t, complexity=c, mse=raw))
            if scaled < raw * (1.0 - 1e-9) and c + 4 <= cfg.max_nodes + 4:
                wrapped = gp.wrap_affine(t, a, b)
                _offer(
                    archive,
                    ArchiveEntry(
                        tree=wrapped, complexity=complexity(wrapped), mse=gp.mse(wrapped)
                    ),
                )
        return comp, errs

    comp, errs = evaluate(population)
    for _ in range(cfg.generations):
        ranks = _dominance_ranks(comp, errs)
        scores = errs + cfg.parsimony * comp

        def tournament():
            best = None
            for _ in range(3):
                i = gp.rng.integers(len(population))
                key = (ranks[i], scores[i], i)
                if best is None or key < best[0]:
                    best = (key, i)
            return population[best[1]]

        offspring = []
        for _ in range(cfg.population):
            roll = gp.rng.random()
            if roll < cfg.crossover_rate:
                offspring.append(gp.crossover(tournament(), tournament()))
            elif roll < cfg.crossover_rate + cfg.mutation_rate:
                offspring.append(gp.mutate(tournament()))
            else:
                offspring.append(tournament())
        off_comp, off_errs = evaluate(offspring)

        union = population + offspring
        ucomp = np.concatenate([comp, off_comp])
        uerrs = np.concatenate([errs, off_errs])
        uranks = _dominance_ranks(ucomp, uerrs)
        uscores = uerrs + cfg.parsimony * ucomp
        order = sorted(range(len(union)), key=lambda i: (uranks[i], uscores[i], i))
        keep = order[: cfg.population]
        population = [union[i] for i in keep]
        comp = ucomp[keep]
        errs = uerrs[keep]

        for entry in list(archive):
            refined = gp.refine_constants(entry.tree)
            if refined is not entry.tree:
                _offer(
                    archive,
                    ArchiveEntry(
                        tree=refined,
                        complexity=complexity(refined),
                        mse=gp.mse(refined),
                    ),
                )

    return ParetoArchive(entries=tuple(archive))
