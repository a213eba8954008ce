"""Holomorphic prepotentials and their fourth-order jets.

A jet is the truncated Taylor expansion of F at a point: the value and the
fully symmetric complex derivative tensors up to order four.  Quadratic and
cubic prepotentials use closed forms; expression prepotentials are evaluated
compositionally with truncated jet arithmetic.
"""

from __future__ import annotations

import ast
import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError

KINDS = ("quadratic", "cubic", "expression")


@dataclass(frozen=True)
class PrepotentialSpec:
    """A holomorphic prepotential in the variables ``z0 .. zn``.

    ``eta`` is used by the quadratic kind, ``C`` (a dense symmetric array
    indexed by ``1..n`` shifted to ``0..n-1``) by the cubic kind and
    ``expr`` by the expression kind.
    """

    kind: str
    n: int
    eta: np.ndarray | None = None
    C: np.ndarray | None = None
    expr: str | None = None
    _tree: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown prepotential kind {self.kind!r}", "kind")
        if int(self.n) < 0:
            raise ConfigError("n must be non-negative", "n")
        object.__setattr__(self, "n", int(self.n))
        dim = self.n + 1
        if self.kind == "quadratic":
            eta = np.asarray(self.eta, dtype=float)
            if eta.shape != (dim, dim):
                raise ConfigError(f"eta must be {dim}x{dim}", "eta")
            if not np.allclose(eta, eta.T, rtol=0, atol=1e-14):
                raise ConfigError("eta must be symmetric", "eta")
            object.__setattr__(self, "eta", eta)
        elif self.kind == "cubic":
            C = np.asarray(self.C, dtype=float)
            if C.shape != (self.n,) * 3:
                raise ConfigError(f"C must have shape {(self.n,) * 3}", "C")
            object.__setattr__(self, "C", _symmetrize(C))
        else:
            if not isinstance(self.expr, str) or not self.expr.strip():
                raise ConfigError("expression kind needs a non-empty 'expr'", "expr")
            object.__setattr__(self, "_tree", _parse_expression(self.expr, self.n))

    @property
    def dim(self) -> int:
        return self.n + 1

    @classmethod
    def quadratic(cls, eta) -> "PrepotentialSpec":
        eta = np.asarray(eta, dtype=float)
        return cls("quadratic", eta.shape[0] - 1, eta=eta)

    @classmethod
    def cubic(cls, n: int, entries: dict) -> "PrepotentialSpec":
        """Cubic prepotential from ``{(a, b, c): value}`` with 1-based indices.

        Each value is assigned to C_abc and all its permutations, so that
        F = sum_abc C_abc z^a z^b z^c / z^0.
        """
        return cls("cubic", n, C=_cubic_array(n, entries))

    @classmethod
    def expression(cls, n: int, expr: str) -> "PrepotentialSpec":
        return cls("expression", n, expr=expr)

    @classmethod
    def from_dict(cls, data: dict) -> "PrepotentialSpec":
        if not isinstance(data, dict):
            raise ConfigError("prepotential must be a JSON object", "prepotential")
        kind = data.get("kind")
        if "n" not in data:
            raise ConfigError("missing field", "prepotential.n")
        n = data["n"]
        if not isinstance(n, int):
            raise ConfigError("must be an integer", "prepotential.n")
        if kind == "quadratic":
            if "eta" not in data:
                raise ConfigError("missing field", "prepotential.eta")
            return cls("quadratic", n, eta=np.asarray(data["eta"], dtype=float))
        if kind == "cubic":
            raw = data.get("C")
            if not isinstance(raw, dict):
                raise ConfigError("must be an object {'abc': coeff}", "prepotential.C")
            entries = {}
            for key, value in raw.items():
                entries[_parse_cubic_key(key, n)] = float(value)
            return cls("cubic", n, C=_cubic_array(n, entries))
        if kind == "expression":
            return cls("expression", n, expr=data.get("expr"))
        raise ConfigError(f"unknown kind {kind!r}", "prepotential.kind")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.kind == "quadratic":
            out["eta"] = self.eta.tolist()
        elif self.kind == "cubic":
            C = {}
            for a, b, c in itertools.combinations_with_replacement(range(self.n), 3):
                if self.C[a, b, c] != 0.0:
                    C[f"{a + 1}{b + 1}{c + 1}"] = float(self.C[a, b, c])
            out["C"] = C
        else:
            out["expr"] = self.expr
        return out


def _symmetrize(T: np.ndarray) -> np.ndarray:
    if T.ndim < 2:
        return T
    perms = list(itertools.permutations(range(T.ndim)))
    return sum(T.transpose(p) for p in perms) / len(perms)


def _cubic_array(n: int, entries: dict) -> np.ndarray:
    C = np.zeros((n, n, n))
    for idx, value in entries.items():
        if len(idx) != 3 or any(not 1 <= i <= n for i in idx):
            raise ConfigError(f"cubic index {idx} out of range 1..{n}", "prepotential.C")
        for a, b, c in set(itertools.permutations(idx)):
            C[a - 1, b - 1, c - 1] = value
    return C


def _parse_cubic_key(key: str, n: int) -> tuple:
    parts = key.split(",") if "," in key else list(key)
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad cubic index key {key!r}", "prepotential.C") from None
    if len(idx) != 3:
        raise ConfigError(f"cubic index key {key!r} needs three indices", "prepotential.C")
    return idx


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet4:
    value: complex
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray

    @property
    def dim(self) -> int:
        return self.d1.shape[0]

    def derivative(self, order: int) -> np.ndarray:
        return (self.value, self.d1, self.d2, self.d3, self.d4)[order]


@lru_cache(maxsize=None)
def _perms(k: int) -> tuple:
    return tuple(itertools.permutations(range(k)))


def _sym_outer(*parts: np.ndarray) -> np.ndarray:
    """Symmetrized outer product of symmetric tensors."""
    out = parts[0]
    for p in parts[1:]:
        out = np.multiply.outer(out, p)
    if out.ndim < 2:
        return out
    perms = _perms(out.ndim)
    return sum(out.transpose(p) for p in perms) / len(perms)


def _const(value: complex, dim: int) -> Jet4:
    z = np.zeros
    c = complex(value)
    return Jet4(c, z(dim, complex), z((dim,) * 2, complex), z((dim,) * 3, complex),
                z((dim,) * 4, complex))


def _variable(index: int, z: np.ndarray) -> Jet4:
    dim = z.shape[0]
    jet = _const(z[index], dim)
    d1 = jet.d1.copy()
    d1[index] = 1.0
    return Jet4(jet.value, d1, jet.d2, jet.d3, jet.d4)


def _add(f: Jet4, g: Jet4, sign: float = 1.0) -> Jet4:
    return Jet4(f.value + sign * g.value, f.d1 + sign * g.d1, f.d2 + sign * g.d2,
                f.d3 + sign * g.d3, f.d4 + sign * g.d4)


def _scale(f: Jet4, s: complex) -> Jet4:
    return Jet4(s * f.value, s * f.d1, s * f.d2, s * f.d3, s * f.d4)


def _mul(f: Jet4, g: Jet4) -> Jet4:
    f0, f1, f2, f3, f4 = f.value, f.d1, f.d2, f.d3, f.d4
    g0, g1, g2, g3, g4 = g.value, g.d1, g.d2, g.d3, g.d4
    d1 = f1 * g0 + f0 * g1
    d2 = f2 * g0 + 2 * _sym_outer(f1, g1) + f0 * g2
    d3 = f3 * g0 + 3 * _sym_outer(f2, g1) + 3 * _sym_outer(f1, g2) + f0 * g3
    d4 = (f4 * g0 + 4 * _sym_outer(f3, g1) + 6 * _sym_outer(f2, g2)
          + 4 * _sym_outer(f1, g3) + f0 * g4)
    return Jet4(f0 * g0, d1, d2, d3, d4)


def _compose(g: Jet4, h: tuple) -> Jet4:
    """Jet of h(g) given h and its first four derivatives at g.value."""
    h0, h1, h2, h3, h4 = h
    g1, g2, g3, g4 = g.d1, g.d2, g.d3, g.d4
    d1 = h1 * g1
    d2 = h2 * _sym_outer(g1, g1) + h1 * g2
    d3 = h3 * _sym_outer(g1, g1, g1) + 3 * h2 * _sym_outer(g1, g2) + h1 * g3
    d4 = (h4 * _sym_outer(g1, g1, g1, g1) + 6 * h3 * _sym_outer(g1, g1, g2)
          + h2 * (3 * _sym_outer(g2, g2) + 4 * _sym_outer(g1, g3)) + h1 * g4)
    return Jet4(h0, d1, d2, d3, d4)


def _reciprocal(g: Jet4) -> Jet4:
    u = g.value
    if u == 0:
        raise DomainError("division by zero in prepotential expression")
    return _compose(g, (1 / u, -1 / u**2, 2 / u**3, -6 / u**4, 24 / u**5))


def _is_constant(f: Jet4) -> bool:
    return not (f.d1.any() or f.d2.any() or f.d3.any() or f.d4.any())


def _power(base: Jet4, exponent: Jet4) -> Jet4:
    if not _is_constant(exponent):
        raise DomainError("exponents depending on z are not supported")
    p = exponent.value
    if p.imag == 0 and p.real == int(p.real) and p.real >= 0:
        k = int(p.real)
        out = _const(1.0, base.dim)
        for _ in range(k):
            out = _mul(out, base)
        return out
    if p.imag == 0 and p.real == int(p.real):
        return _reciprocal(_power(base, _const(-p.real, base.dim)))
    u = base.value
    if u == 0:
        raise DomainError("non-integer power of zero in prepotential expression")
    coeffs = [1.0 + 0j]
    for k in range(4):
        coeffs.append(coeffs[-1] * (p - k))
    return _compose(base, tuple(c * u ** (p - k) for k, c in enumerate(coeffs)))


_BINOPS = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div",
           ast.Pow: "pow", ast.BitXor: "pow"}


def _parse_expression(expr: str, n: int) -> tuple:
    """Parse an arithmetic expression into a nested-tuple tree."""
    try:
        node = ast.parse(expr.replace("^", "**"), mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression: {exc.msg}", "prepotential.expr") from None

    def build(nd):
        if isinstance(nd, ast.BinOp) and type(nd.op) in _BINOPS:
            return (_BINOPS[type(nd.op)], build(nd.left), build(nd.right))
        if isinstance(nd, ast.UnaryOp) and isinstance(nd.op, (ast.USub, ast.UAdd)):
            inner = build(nd.operand)
            return ("neg", inner) if isinstance(nd.op, ast.USub) else inner
        if isinstance(nd, ast.Constant) and isinstance(nd.value, (int, float, complex)) \
                and not isinstance(nd.value, bool):
            return ("const", complex(nd.value))
        if isinstance(nd, ast.Name):
            if nd.id in ("i", "I", "j"):
                return ("const", 1j)
            if nd.id.startswith("z") and nd.id[1:].isdigit():
                k = int(nd.id[1:])
                if k > n:
                    raise ConfigError(f"variable {nd.id} exceeds n={n}", "prepotential.expr")
                return ("var", k)
        raise ConfigError(f"unsupported syntax {ast.dump(nd)[:40]}", "prepotential.expr")

    return build(node)


def _eval_tree(tree: tuple, z: np.ndarray) -> Jet4:
    op = tree[0]
    if op == "const":
        return _const(tree[1], z.shape[0])
    if op == "var":
        return _variable(tree[1], z)
    if op == "neg":
        return _scale(_eval_tree(tree[1], z), -1.0)
    a = _eval_tree(tree[1], z)
    b = _eval_tree(tree[2], z)
    if op == "add":
        return _add(a, b)
    if op == "sub":
        return _add(a, b, -1.0)
    if op == "mul":
        return _mul(a, b)
    if op == "div":
        return _mul(a, _reciprocal(b))
    return _power(a, b)


def _quadratic_jet(eta: np.ndarray, z: np.ndarray) -> Jet4:
    dim = z.shape[0]
    d2 = 0.5j * eta.astype(complex)
    d1 = d2 @ z
    value = 0.5 * (z @ d1)
    return Jet4(complex(value), d1, d2, np.zeros((dim,) * 3, complex),
                np.zeros((dim,) * 4, complex))


def _cubic_jet(C: np.ndarray, z: np.ndarray) -> Jet4:
    if z[0] == 0:
        raise DomainError("cubic prepotential requires z0 != 0")
    dim = z.shape[0]
    w = z[1:]
    # P(z) = C_abc w^a w^b w^c embedded in dim variables (index 0 inert)
    P = [0j, np.zeros(dim, complex), np.zeros((dim,) * 2, complex),
         np.zeros((dim,) * 3, complex), np.zeros((dim,) * 4, complex)]
    Cw = np.einsum("abc,c->ab", C, w)
    P[0] = complex(np.einsum("ab,a,b->", Cw, w, w))
    P[1][1:] = 3 * Cw @ w
    P[2][1:, 1:] = 6 * Cw
    P[3][1:, 1:, 1:] = 6 * C
    poly = Jet4(*P)
    u = z[0]
    inv = [1 / u, -1 / u**2, 2 / u**3, -6 / u**4, 24 / u**5]
    R = [0j, np.zeros(dim, complex), np.zeros((dim,) * 2, complex),
         np.zeros((dim,) * 3, complex), np.zeros((dim,) * 4, complex)]
    R[0] = inv[0]
    R[1][0] = inv[1]
    R[2][0, 0] = inv[2]
    R[3][0, 0, 0] = inv[3]
    R[4][0, 0, 0, 0] = inv[4]
    return _mul(poly, Jet4(*R))


def jet_eval(spec: PrepotentialSpec, z) -> Jet4:
    """Fourth-order jet of the prepotential at ``z``."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (spec.dim,):
        raise DomainError(f"z must have {spec.dim} components, got shape {z.shape}")
    if spec.kind == "quadratic":
        return _quadratic_jet(spec.eta, z)
    if spec.kind == "cubic":
        return _cubic_jet(spec.C, z)
    return _eval_tree(spec._tree, z)


def gradient_hessian(spec: PrepotentialSpec, z) -> tuple:
    """``(F_I, F_IJ)`` from explicit formulas, without jet arithmetic.

    Used where only second order is needed (coordinate inversion and the
    finite-difference oracles); the expression kind falls back to its jet.
    """
    z = np.asarray(z, dtype=complex)
    if z.shape != (spec.dim,):
        raise DomainError(f"z must have {spec.dim} components, got shape {z.shape}")
    if spec.kind == "quadratic":
        d2 = 0.5j * spec.eta
        return d2 @ z, d2
    if spec.kind == "cubic":
        u = z[0]
        if u == 0:
            raise DomainError("cubic prepotential requires z0 != 0")
        w = z[1:]
        Cw = np.einsum("abc,c->ab", spec.C, w)
        Pa = 3 * Cw @ w
        P = (w @ Pa) / 3
        d1 = np.concatenate([[-P / u**2], Pa / u])
        d2 = np.empty((spec.dim, spec.dim), complex)
        d2[0, 0] = 2 * P / u**3
        d2[0, 1:] = d2[1:, 0] = -Pa / u**2
        d2[1:, 1:] = 6 * Cw / u
        return d1, d2
    jet = _eval_tree(spec._tree, z)
    return jet.d1, jet.d2


@dataclass
class HomogeneityReport:
    passed: bool
    residuals: dict
    failures: list


def check_homogeneity(spec: PrepotentialSpec, z, tol: float = 1e-12) -> HomogeneityReport:
    """Check the Euler relations of a degree-2 homogeneous function at ``z``.

    Residuals are relative to the largest magnitude entering each relation
    (floored at 1).
    """
    z = np.asarray(z, dtype=complex)
    jet = jet_eval(spec, z)
    relations = {
        "z.F1 = 2F": (z @ jet.d1, 2 * jet.value),
        "z.F2 = F1": (np.einsum("j,ij->i", z, jet.d2), jet.d1),
        "z.F3 = 0": (np.einsum("k,ijk->ij", z, jet.d3), np.zeros_like(jet.d2)),
        "z.F4 = -F3": (np.einsum("l,ijkl->ijk", z, jet.d4), -jet.d3),
    }
    scale = max(1.0, abs(jet.value), *(float(np.max(np.abs(d), initial=0.0))
                                       for d in (jet.d1, jet.d2, jet.d3)))
    residuals, failures = {}, []
    for name, (lhs, rhs) in relations.items():
        r = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs)), initial=0.0)) / scale
        residuals[name] = r
        if not r <= tol:
            failures.append((name, r))
    return HomogeneityReport(not failures, residuals, failures)

