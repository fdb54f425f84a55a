"""Builders for the standard algebroid families.

Every builder returns an :class:`~liepoisson.algebroid.AlgebroidSpec` that
passes :func:`~liepoisson.algebroid.validate` on its chart.  Lie algebras
(empty base) are represented with one dummy base coordinate ``t`` on which
nothing depends and a zero anchor, so all chart-level machinery applies
uniformly; Hamiltonian flows never move the dummy coordinate.
"""

from __future__ import annotations

import numpy as np

from .algebroid import (
    AlgebroidSpec,
    SpecFormatError,
    _as_field,
    vector_field_bracket,
)
from .expr import ScalarField, constant

__all__ = [
    "so3_constants",
    "heisenberg_constants",
    "from_lie_algebra",
    "tangent",
    "regular_distribution",
    "transformation",
    "trivial_gauge",
    "cotangent_of_poisson",
    "magnetic_extension",
]


def so3_constants() -> np.ndarray:
    """Structure constants of so(3): [e_i, e_j] = eps_ijk e_k (0-based)."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[k, i, j] = 1.0
        c[k, j, i] = -1.0
    return c


def heisenberg_constants() -> np.ndarray:
    """Structure constants of the Heisenberg algebra: [e_0, e_1] = e_2."""
    c = np.zeros((3, 3, 3))
    c[2, 0, 1] = 1.0
    c[2, 1, 0] = -1.0
    return c


def _default_coords(n: int) -> tuple[str, ...]:
    return tuple(f"x{a + 1}" for a in range(n))


def _check_constants(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 3 or c.shape[0] != c.shape[1] or c.shape[1] != c.shape[2]:
        raise SpecFormatError("structure constants must be an m x m x m array")
    if np.max(np.abs(c + np.swapaxes(c, 1, 2))) > 0:
        raise SpecFormatError("structure constants must be antisymmetric in (i, j)")
    return c


def from_lie_algebra(constants, name: str = "lie-algebra") -> AlgebroidSpec:
    """A Lie algebra as an algebroid over a one-point base (dummy chart)."""
    c = _check_constants(constants)
    m = c.shape[0]
    anchor = [[0.0] * m]
    structure = [[[c[k, i, j] for j in range(m)] for i in range(m)] for k in range(m)]
    return AlgebroidSpec(("t",), anchor, structure, name=name)


def tangent(n: int, name: str | None = None) -> AlgebroidSpec:
    """The tangent algebroid TM of an n-dimensional chart: rho = id, c = 0."""
    coords = _default_coords(n)
    anchor = [[1.0 if a == i else 0.0 for i in range(n)] for a in range(n)]
    structure = [[[0.0] * n for _ in range(n)] for _ in range(n)]
    return AlgebroidSpec(coords, anchor, structure, name=name or f"tangent{n}d")


def transformation(
    action_fields, constants, coords=None, name: str = "transformation"
) -> AlgebroidSpec:
    """Transformation algebroid of a Lie algebra action.

    ``action_fields`` lists, per generator, the n components of its action
    vector field on the chart; the map generator -> vector field must be
    bracket preserving, which ``validate`` confirms post hoc.
    """
    c = _check_constants(constants)
    m = c.shape[0]
    if len(action_fields) != m:
        raise SpecFormatError("one action field per Lie algebra generator required")
    first = list(action_fields[0])
    coords = tuple(coords) if coords is not None else _default_coords(len(first))
    n = len(coords)
    anchor = [
        [_as_field(list(action_fields[i])[a], coords, f"action[{i}][{a}]") for i in range(m)]
        for a in range(n)
    ]
    structure = [[[c[k, i, j] for j in range(m)] for i in range(m)] for k in range(m)]
    return AlgebroidSpec(coords, anchor, structure, name=name)


def trivial_gauge(n: int, constants, name: str = "trivial-gauge") -> AlgebroidSpec:
    """Gauge algebroid of a trivial principal bundle: A = TM + (M x g).

    The anchor is projection to the TM block and the bracket is the TM
    commutator plus the fiberwise Lie algebra bracket on the g block.
    """
    c = _check_constants(constants)
    g = c.shape[0]
    m = n + g
    coords = _default_coords(n)
    anchor = [[1.0 if a == i else 0.0 for i in range(m)] for a in range(n)]
    structure = [[[0.0] * m for _ in range(m)] for _ in range(m)]
    for k in range(g):
        for i in range(g):
            for j in range(g):
                structure[n + k][n + i][n + j] = c[k, i, j]
    return AlgebroidSpec(coords, anchor, structure, name=name)


def _sample_antisymmetry(entries, coords, what: str) -> None:
    rng = np.random.default_rng(7)
    n = len(coords)
    pts = rng.uniform(-1.0, 1.0, size=(8, n))
    for i in range(n):
        for j in range(n):
            for pt in pts:
                defect = entries[i][j].eval(pt) + entries[j][i].eval(pt)
                if abs(defect) > 1e-12:
                    raise SpecFormatError(f"{what} must be antisymmetric")


def cotangent_of_poisson(pi, coords=None, name: str = "cotangent-poisson") -> AlgebroidSpec:
    """The cotangent algebroid T*M of a Poisson chart (M, pi).

    With frame e_i = dx^i the Koszul bracket gives [e_i, e_j] = d(pi^ij), so
    c^k_ij = d_k pi^ij, and the anchor is pi-sharp: rho(e_i) = pi^ia d/dx^a,
    i.e. the anchor matrix is the transpose of the bivector component matrix.
    The Jacobi identity of the result is equivalent to pi being Poisson.
    """
    pi = [list(row) for row in pi]
    n = len(pi)
    coords = tuple(coords) if coords is not None else _default_coords(n)
    if any(len(row) != n for row in pi) or len(coords) != n:
        raise SpecFormatError("bivector must be n x n over n coordinates")
    fields = [
        [_as_field(pi[i][j], coords, f"pi[{i}][{j}]") for j in range(n)] for i in range(n)
    ]
    _sample_antisymmetry(fields, coords, "the Poisson bivector")
    anchor = [[fields[i][a] for i in range(n)] for a in range(n)]
    structure = [
        [[fields[i][j].diff(coords[k]) for j in range(n)] for i in range(n)]
        for k in range(n)
    ]
    return AlgebroidSpec(coords, anchor, structure, name=name)


def magnetic_extension(n: int, b, name: str = "magnetic") -> AlgebroidSpec:
    """Central extension of TM by a closed 2-form B: rank n+1, anchor [id; 0].

    The only nonzero structure functions are c^(n)_ij = B_ij on the TM block,
    so the Jacobi defect of the result measures dB.
    """
    coords = _default_coords(n)
    b = [list(row) for row in b]
    if len(b) != n or any(len(row) != n for row in b):
        raise SpecFormatError("B must be an n x n component matrix")
    fields = [
        [_as_field(b[i][j], coords, f"B[{i}][{j}]") for j in range(n)] for i in range(n)
    ]
    _sample_antisymmetry(fields, coords, "the magnetic 2-form")
    m = n + 1
    anchor = [[1.0 if a == i else 0.0 for i in range(m)] for a in range(n)]
    zero = constant(0.0, coords)
    structure = [[[zero] * m for _ in range(m)] for _ in range(m)]
    for i in range(n):
        for j in range(n):
            structure[n][i][j] = fields[i][j]
    return AlgebroidSpec(coords, anchor, structure, name=name)


# -- involutive distributions ------------------------------------------------


def _symbolic_det(g, zero) -> ScalarField:
    k = len(g)
    if k == 1:
        return g[0][0]
    total = zero
    for col in range(k):
        minor = [[g[r][c] for c in range(k) if c != col] for r in range(1, k)]
        term = g[0][col] * _symbolic_det(minor, zero)
        total = total + term if col % 2 == 0 else total - term
    return total


def regular_distribution(frame, coords=None, name: str = "distribution") -> AlgebroidSpec:
    """Algebroid of an involutive regular distribution spanned by ``frame``.

    ``frame`` lists k vector fields (n components each) on the chart.  The
    structure functions solve [X_i, X_j] = f^l_ij X_l in least squares via the
    symbolic Gram system; if the frame is not involutive the residual shows up
    as an anchor-morphism defect in ``validate``.
    """
    frame = [list(x) for x in frame]
    k = len(frame)
    if k == 0:
        raise SpecFormatError("frame must contain at least one vector field")
    if k > 4:
        raise SpecFormatError("symbolic Gram solve supports frames of rank <= 4")
    coords = tuple(coords) if coords is not None else _default_coords(len(frame[0]))
    n = len(coords)
    fields = [
        [_as_field(frame[i][a], coords, f"frame[{i}][{a}]") for a in range(n)]
        for i in range(k)
    ]
    zero = constant(0.0, coords)

    gram = [
        [sum((fields[i][a] * fields[j][a] for a in range(n)), zero) for j in range(k)]
        for i in range(k)
    ]
    det = _symbolic_det(gram, zero)

    anchor = [[fields[i][a] for i in range(k)] for a in range(n)]
    structure = [[[zero] * k for _ in range(k)] for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            w = vector_field_bracket(coords, fields[i], fields[j])
            rhs = [
                sum((fields[l][a] * w[a] for a in range(n)), zero) for l in range(k)
            ]
            for l in range(k):
                replaced = [
                    [rhs[r] if c == l else gram[r][c] for c in range(k)]
                    for r in range(k)
                ]
                f = _symbolic_det(replaced, zero) / det
                structure[l][i][j] = f
                structure[l][j][i] = -f
    return AlgebroidSpec(coords, anchor, structure, name=name)
