"""The Lie-Poisson structure on the dual bundle A*.

Coordinates on A* are (x^1..x^n, xi_1..xi_m), the base chart followed by the
fiber components in the frame dual to e_i.  The bivector is linear in the
fiber:

    Pi_{xi_i xi_j} = c^k_ij(x) xi_k,   Pi_{xi_i x^a} = rho^a_i(x),   Pi_{xx} = 0,

and the bracket convention is {F, G} = Pi(dF, dG), fixed so that
{l_u, p*f} = p*(rho(u) f) and {l_u, l_v} = l_[u,v].  Hamiltonian vector
fields use X_F(G) = {F, G}.  All brackets are computed symbolically, so
Jacobi and Casimir defects carry no finite-difference noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebroid import AlgebroidSpec, Section
from .expr import ScalarField, constant, coordinate

__all__ = [
    "DualPoint",
    "dual_coordinate",
    "lift_to_dual",
    "linear_function",
    "bivector_fields",
    "bivector_at",
    "poisson_bracket",
    "hamiltonian_fields",
    "hamiltonian_vf",
    "jacobi_defect",
    "casimir_defect",
]


@dataclass(frozen=True)
class DualPoint:
    """A point (x, xi) of A*: base point plus covector in the dual frame."""

    x: np.ndarray
    xi: np.ndarray

    def __init__(self, x, xi):
        object.__setattr__(self, "x", np.asarray(x, dtype=float))
        object.__setattr__(self, "xi", np.asarray(xi, dtype=float))

    def ambient(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi])

    @staticmethod
    def from_ambient(spec: AlgebroidSpec, vec) -> "DualPoint":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (spec.n + spec.m,):
            raise ValueError(f"expected {spec.n + spec.m} coordinates")
        return DualPoint(vec[: spec.n], vec[spec.n :])


def _ambient(spec: AlgebroidSpec, pt) -> np.ndarray:
    if isinstance(pt, DualPoint):
        if len(pt.x) != spec.n or len(pt.xi) != spec.m:
            raise ValueError("dual point dimensions do not match the spec")
        return pt.ambient()
    vec = np.asarray(pt, dtype=float)
    if vec.shape != (spec.n + spec.m,):
        raise ValueError(f"expected {spec.n + spec.m} coordinates")
    return vec


def dual_coordinate(spec: AlgebroidSpec, index: int) -> ScalarField:
    """The coordinate function q^A on A* (base first, then fiber)."""
    return coordinate(spec.dual_coords[index], spec.dual_coords)


def lift_to_dual(spec: AlgebroidSpec, f: ScalarField) -> ScalarField:
    """p*f: a base function viewed as a fiberwise-constant function on A*."""
    return f.with_coords(spec.dual_coords)


def linear_function(spec: AlgebroidSpec, u: Section) -> ScalarField:
    """l_u(x, xi) = u^i(x) xi_i, the fiberwise-linear function of a section."""
    dc = spec.dual_coords
    total = constant(0.0, dc)
    for i in range(spec.m):
        if u[i].is_zero:
            continue
        total = total + u[i].with_coords(dc) * coordinate(dc[spec.n + i], dc)
    return total


def bivector_fields(spec: AlgebroidSpec):
    """Symbolic (n+m)x(n+m) bivector matrix over the dual coordinates."""

    def build():
        dc = spec.dual_coords
        n, m = spec.n, spec.m
        zero = constant(0.0, dc)
        pi = [[zero for _ in range(n + m)] for _ in range(n + m)]
        for i in range(m):
            for a in range(n):
                rho = spec.anchor[a][i]
                if rho.is_zero:
                    continue
                lifted = rho.with_coords(dc)
                pi[n + i][a] = lifted
                pi[a][n + i] = -lifted
        for i in range(m):
            for j in range(m):
                t = zero
                for k in range(m):
                    c = spec.structure[k][i][j]
                    if c.is_zero:
                        continue
                    t = t + c.with_coords(dc) * coordinate(dc[n + k], dc)
                pi[n + i][n + j] = t
        return pi

    return spec.cached("bivector_fields", build)


def bivector_at(spec: AlgebroidSpec, pt) -> np.ndarray:
    """Evaluate the Lie-Poisson bivector at a dual point."""
    fns = spec.cached(
        "bivector_fns",
        lambda: [[f.compile() for f in row] for row in bivector_fields(spec)],
    )
    vec = _ambient(spec, pt)
    return np.array([[fn(vec) for fn in row] for row in fns])


def poisson_bracket(spec: AlgebroidSpec, f: ScalarField, g: ScalarField) -> ScalarField:
    """Symbolic {F, G} = Pi(dF, dG) on A*."""
    dc = spec.dual_coords
    if f.coords != dc or g.coords != dc:
        raise ValueError("both functions must live over the dual coordinates")
    pi = bivector_fields(spec)
    total = constant(0.0, dc)
    for a_idx, name_a in enumerate(dc):
        df = f.diff(name_a)
        if df.is_zero:
            continue
        for b_idx, name_b in enumerate(dc):
            entry = pi[a_idx][b_idx]
            if entry.is_zero:
                continue
            dg = g.diff(name_b)
            if dg.is_zero:
                continue
            total = total + entry * df * dg
    return total


def hamiltonian_fields(spec: AlgebroidSpec, f: ScalarField) -> tuple[ScalarField, ...]:
    """Components of X_F, with X_F(G) = {F, G}: X_F^A = Pi^{BA} d_B F."""
    dc = spec.dual_coords
    if f.coords != dc:
        raise ValueError("function must live over the dual coordinates")
    pi = bivector_fields(spec)
    partials = [f.diff(name) for name in dc]
    comps = []
    for a_idx in range(len(dc)):
        t = constant(0.0, dc)
        for b_idx in range(len(dc)):
            entry = pi[b_idx][a_idx]
            if entry.is_zero or partials[b_idx].is_zero:
                continue
            t = t + entry * partials[b_idx]
        comps.append(t)
    return tuple(comps)


def hamiltonian_vf(spec: AlgebroidSpec, f: ScalarField, pt) -> np.ndarray:
    """Evaluate X_F at a dual point; components ordered (x^a, xi_j)."""
    vec = _ambient(spec, pt)
    return np.array([c.eval(vec) for c in hamiltonian_fields(spec, f)])


def _jacobi_fields(spec: AlgebroidSpec):
    dc = spec.dual_coords
    coords = [coordinate(name, dc) for name in dc]
    fields = []
    for a in range(len(dc)):
        for b in range(a + 1, len(dc)):
            for c in range(b + 1, len(dc)):
                total = constant(0.0, dc)
                for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
                    inner = poisson_bracket(spec, coords[p], coords[q])
                    total = total + poisson_bracket(spec, inner, coords[r])
                if not total.is_zero:
                    fields.append(total.compile())
    return fields


def jacobi_defect(spec: AlgebroidSpec, pt) -> float:
    """Max |{{F,G},H} + cyclic| over coordinate-function triples at ``pt``.

    The Jacobiator of an antisymmetric bracket is totally antisymmetric, so
    ordered triples with distinct entries suffice.
    """
    fns = spec.cached("jacobi_fields", lambda: _jacobi_fields(spec))
    vec = _ambient(spec, pt)
    return max((abs(fn(vec)) for fn in fns), default=0.0)


def casimir_defect(spec: AlgebroidSpec, f: ScalarField, points) -> float:
    """Max norm of X_F over the points; ~0 iff F is a Casimir there."""
    fns = [c.compile() for c in hamiltonian_fields(spec, f)]
    worst = 0.0
    for pt in points:
        vec = _ambient(spec, pt)
        worst = max(worst, float(np.linalg.norm([fn(vec) for fn in fns])))
    return worst
