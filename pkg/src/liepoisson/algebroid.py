"""Lie algebroids in a single coordinate chart.

An algebroid (A, rho, [.,.]) of rank m over an n-dimensional chart is encoded
by the anchor components rho^a_i(x) with rho(e_i) = sum_a rho^a_i d/dx^a and
the structure functions c^k_ij(x) with [e_i, e_j] = sum_k c^k_ij e_k.  The
bracket of arbitrary sections u = u^i e_i, v = v^j e_j follows the local
formula

    [u, v]^k = u^i v^j c^k_ij + rho(u)(v^k) - rho(v)(u^k),

built symbolically so repeated brackets stay exact.  Axioms (antisymmetry,
anchor morphism, Jacobi) are checked by sampling, not by symbolic proof.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .expr import ExprError, ScalarField, constant, parse

__all__ = [
    "AlgebroidSpec",
    "Section",
    "OneForm",
    "HomTMA",
    "ValidationReport",
    "SpecFormatError",
    "section",
    "one_form",
    "hom_tma",
    "basis_section",
    "zero_section",
    "coordinate_differential",
    "differential_of",
    "zero_one_form",
    "elementary_hom",
    "zero_hom",
    "bracket_sections",
    "anchor_of_section",
    "apply_hom",
    "vector_field_bracket",
    "lie_derivative_form",
    "validate",
    "hom_group_multiply",
    "spec_to_dict",
    "spec_from_dict",
    "load_spec",
    "save_spec",
]

_FIBER_NAME = re.compile(r"^xi\d+$")


class SpecFormatError(ValueError):
    """Malformed spec document; ``location`` names the offending entry."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _as_field(value, coords: tuple[str, ...], location: str = "") -> ScalarField:
    if isinstance(value, ScalarField):
        if value.coords != coords:
            raise SpecFormatError("field declared over different coordinates", location)
        return value
    if isinstance(value, str):
        try:
            return parse(value, coords)
        except ExprError as exc:
            raise SpecFormatError(str(exc), location) from exc
    if isinstance(value, (int, float)):
        return constant(value, coords)
    raise SpecFormatError(f"cannot interpret {value!r} as a scalar field", location)


class AlgebroidSpec:
    """Chart description of a Lie algebroid; treat instances as immutable."""

    def __init__(self, base_coords, anchor, structure, name: str = "algebroid"):
        self.base_coords = tuple(base_coords)
        self.name = name
        n = len(self.base_coords)
        if n == 0:
            raise SpecFormatError(
                "empty charts are not supported; represent a Lie algebra with "
                "one dummy base coordinate and zero anchor"
            )
        if len(set(self.base_coords)) != n:
            raise SpecFormatError("duplicate base coordinate names")
        for c in self.base_coords:
            if _FIBER_NAME.match(c):
                raise SpecFormatError(
                    f"base coordinate '{c}' collides with dual fiber naming xi1..xim"
                )

        anchor = [list(row) for row in anchor]
        if len(anchor) != n:
            raise SpecFormatError(f"anchor has {len(anchor)} rows, expected n={n}")
        m = len(anchor[0]) if anchor else 0
        if m == 0:
            raise SpecFormatError("bundle rank m must be positive")
        self.anchor = tuple(
            tuple(
                _as_field(anchor[a][i], self.base_coords, f"anchor[{a}][{i}]")
                for i in range(m)
            )
            for a in range(n)
        )
        if any(len(row) != m for row in anchor):
            raise SpecFormatError("anchor rows have inconsistent lengths")

        structure = [[list(row) for row in plane] for plane in structure]
        if len(structure) != m or any(
            len(plane) != m or any(len(row) != m for row in plane)
            for plane in structure
        ):
            raise SpecFormatError(f"structure tensor must be {m}x{m}x{m}")
        self.structure = tuple(
            tuple(
                tuple(
                    _as_field(
                        structure[k][i][j],
                        self.base_coords,
                        f"structure[{k}][{i}][{j}]",
                    )
                    for j in range(m)
                )
                for i in range(m)
            )
            for k in range(m)
        )
        self._cache: dict = {}

    # -- dimensions and coordinates ------------------------------------------

    @property
    def n(self) -> int:
        return len(self.base_coords)

    @property
    def m(self) -> int:
        return len(self.structure)

    @property
    def fiber_coords(self) -> tuple[str, ...]:
        return tuple(f"xi{i + 1}" for i in range(self.m))

    @property
    def dual_coords(self) -> tuple[str, ...]:
        return self.base_coords + self.fiber_coords

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # -- evaluation helpers ----------------------------------------------------

    def anchor_at(self, x) -> np.ndarray:
        """Evaluate the anchor matrix rho^a_i at a base point (n x m)."""
        fns = self.cached(
            "anchor_fns",
            lambda: [[f.compile() for f in row] for row in self.anchor],
        )
        x = np.asarray(x, dtype=float)
        return np.array([[fn(x) for fn in row] for row in fns])

    def structure_at(self, x) -> np.ndarray:
        """Evaluate the structure tensor c^k_ij at a base point (m x m x m)."""
        fns = self.cached(
            "structure_fns",
            lambda: [
                [[f.compile() for f in row] for row in plane]
                for plane in self.structure
            ],
        )
        x = np.asarray(x, dtype=float)
        return np.array([[[fn(x) for fn in row] for row in plane] for plane in fns])

    def zero_field(self) -> ScalarField:
        return constant(0.0, self.base_coords)

    def __repr__(self):
        return f"AlgebroidSpec({self.name!r}, n={self.n}, m={self.m})"


# ---------------------------------------------------------------------------
# Sections, one-forms, bundle maps TM -> A
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Section:
    """u = sum_i u^i e_i, with m scalar components over the base chart."""

    components: tuple[ScalarField, ...]

    def __getitem__(self, i):
        return self.components[i]

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class OneForm:
    """gamma = sum_a gamma_a dx^a, with n scalar components."""

    components: tuple[ScalarField, ...]

    def __getitem__(self, a):
        return self.components[a]

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class HomTMA:
    """Bundle map D: TM -> A with D(d/dx^a) = sum_i D^i_a e_i; entries[i][a]."""

    entries: tuple[tuple[ScalarField, ...], ...]

    def __getitem__(self, idx):
        i, a = idx
        return self.entries[i][a]

    def column(self, a) -> tuple[ScalarField, ...]:
        return tuple(row[a] for row in self.entries)


def section(spec: AlgebroidSpec, components) -> Section:
    components = list(components)
    if len(components) != spec.m:
        raise ValueError(f"section needs {spec.m} components, got {len(components)}")
    return Section(
        tuple(_as_field(c, spec.base_coords, f"section[{i}]") for i, c in enumerate(components))
    )


def one_form(spec: AlgebroidSpec, components) -> OneForm:
    components = list(components)
    if len(components) != spec.n:
        raise ValueError(f"one-form needs {spec.n} components, got {len(components)}")
    return OneForm(
        tuple(_as_field(c, spec.base_coords, f"one_form[{a}]") for a, c in enumerate(components))
    )


def hom_tma(spec: AlgebroidSpec, rows) -> HomTMA:
    rows = [list(r) for r in rows]
    if len(rows) != spec.m or any(len(r) != spec.n for r in rows):
        raise ValueError(f"bundle map must be {spec.m}x{spec.n}")
    return HomTMA(
        tuple(
            tuple(_as_field(v, spec.base_coords, f"hom[{i}][{a}]") for a, v in enumerate(row))
            for i, row in enumerate(rows)
        )
    )


def basis_section(spec: AlgebroidSpec, i: int) -> Section:
    return section(spec, [1.0 if j == i else 0.0 for j in range(spec.m)])


def zero_section(spec: AlgebroidSpec) -> Section:
    return section(spec, [0.0] * spec.m)


def coordinate_differential(spec: AlgebroidSpec, a: int) -> OneForm:
    """The one-form dx^a."""
    return one_form(spec, [1.0 if b == a else 0.0 for b in range(spec.n)])


def differential_of(spec: AlgebroidSpec, f: ScalarField) -> OneForm:
    """df for a function on the base chart."""
    return OneForm(tuple(f.diff(c) for c in spec.base_coords))


def zero_one_form(spec: AlgebroidSpec) -> OneForm:
    return one_form(spec, [0.0] * spec.n)


def elementary_hom(spec: AlgebroidSpec, a: int, i: int) -> HomTMA:
    """The bundle map dx^a (x) e_i."""
    return hom_tma(
        spec,
        [
            [1.0 if (r == i and c == a) else 0.0 for c in range(spec.n)]
            for r in range(spec.m)
        ],
    )


def zero_hom(spec: AlgebroidSpec) -> HomTMA:
    return hom_tma(spec, [[0.0] * spec.n for _ in range(spec.m)])


# ---------------------------------------------------------------------------
# Section calculus
# ---------------------------------------------------------------------------


def anchor_of_section(spec: AlgebroidSpec, u: Section) -> tuple[ScalarField, ...]:
    """Vector field rho(u) on the base, components indexed by a."""
    zero = spec.zero_field()
    out = []
    for a in range(spec.n):
        t = zero
        for i in range(spec.m):
            r = spec.anchor[a][i]
            if r.is_zero or u[i].is_zero:
                continue
            t = t + r * u[i]
        out.append(t)
    return tuple(out)


def apply_hom(spec: AlgebroidSpec, d: HomTMA, x_field) -> tuple[ScalarField, ...]:
    """D(X) for a base vector field X given by n components."""
    out = []
    for i in range(spec.m):
        t = spec.zero_field()
        for a in range(spec.n):
            t = t + d.entries[i][a] * x_field[a]
        out.append(t)
    return tuple(out)


def bracket_sections(spec: AlgebroidSpec, u: Section, v: Section) -> Section:
    """[u, v] via the local formula; exact whenever the inputs are."""
    if len(u) != spec.m or len(v) != spec.m:
        raise ValueError("section shape mismatch")
    rho_u = anchor_of_section(spec, u)
    rho_v = anchor_of_section(spec, v)
    comps = []
    for k in range(spec.m):
        t = spec.zero_field()
        for i in range(spec.m):
            if u[i].is_zero:
                continue
            for j in range(spec.m):
                c = spec.structure[k][i][j]
                if c.is_zero or v[j].is_zero:
                    continue
                t = t + u[i] * v[j] * c
        for a, name in enumerate(spec.base_coords):
            if not rho_u[a].is_zero:
                dv = v[k].diff(name)
                if not dv.is_zero:
                    t = t + rho_u[a] * dv
            if not rho_v[a].is_zero:
                du = u[k].diff(name)
                if not du.is_zero:
                    t = t - rho_v[a] * du
        comps.append(t)
    return Section(tuple(comps))


def vector_field_bracket(coords, x_field, y_field) -> tuple[ScalarField, ...]:
    """Commutator [X, Y] of vector fields given by components over ``coords``."""
    comps = []
    for b in range(len(coords)):
        t = None
        for a, name in enumerate(coords):
            term = x_field[a] * y_field[b].diff(name) - y_field[a] * x_field[b].diff(name)
            t = term if t is None else t + term
        comps.append(t)
    return tuple(comps)


def lie_derivative_form(coords, x_field, gamma) -> tuple[ScalarField, ...]:
    """(L_X gamma)_a = X^b d_b gamma_a + gamma_b d_a X^b."""
    comps = []
    for a, name_a in enumerate(coords):
        t = None
        for b, name_b in enumerate(coords):
            term = x_field[b] * gamma[a].diff(name_b) + gamma[b] * x_field[b].diff(name_a)
            t = term if t is None else t + term
        comps.append(t)
    return tuple(comps)


# ---------------------------------------------------------------------------
# Axiom validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    antisymmetry: float
    anchor_morphism: float
    jacobi: float
    tol: float
    point_errors: list = field(default_factory=list)

    @property
    def max_defect(self) -> float:
        return max(self.antisymmetry, self.anchor_morphism, self.jacobi)

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol

    def as_dict(self) -> dict:
        return {
            "antisymmetry": self.antisymmetry,
            "anchor_morphism": self.anchor_morphism,
            "jacobi": self.jacobi,
            "tol": self.tol,
            "point_errors": [str(e) for e in self.point_errors],
            "pass": self.passed,
        }


def _defect_fields(spec: AlgebroidSpec):
    """Symbolic axiom defects, compiled once per spec."""
    n, m = spec.n, spec.m
    antisym = []
    for k in range(m):
        for i in range(m):
            for j in range(i, m):
                f = spec.structure[k][i][j] + spec.structure[k][j][i]
                if not f.is_zero:
                    antisym.append(f)

    anchor = []
    for i in range(m):
        for j in range(i + 1, m):
            for a in range(n):
                t = spec.zero_field()
                for k in range(m):
                    c = spec.structure[k][i][j]
                    if not c.is_zero:
                        t = t + c * spec.anchor[a][k]
                for b, name in enumerate(spec.base_coords):
                    t = t - spec.anchor[b][i] * spec.anchor[a][j].diff(name)
                    t = t + spec.anchor[b][j] * spec.anchor[a][i].diff(name)
                if not t.is_zero:
                    anchor.append(t)

    jacobi = []
    basis = [basis_section(spec, i) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                cyc = zero_section(spec)
                for p, q, r in ((i, j, k), (j, k, i), (k, i, j)):
                    inner = bracket_sections(spec, basis[p], basis[q])
                    outer = bracket_sections(spec, inner, basis[r])
                    cyc = Section(
                        tuple(a + b for a, b in zip(cyc.components, outer.components))
                    )
                jacobi.extend(f for f in cyc.components if not f.is_zero)

    compiled = lambda fs: [f.compile() for f in fs]  # noqa: E731
    return compiled(antisym), compiled(anchor), compiled(jacobi)


def validate(spec: AlgebroidSpec, sample_points, tol: float = 1e-8) -> ValidationReport:
    """Max axiom defects over sample points; domain errors are per-point notes."""
    antisym, anchor, jacobi = spec.cached("defect_fields", lambda: _defect_fields(spec))
    maxima = [0.0, 0.0, 0.0]
    errors = []
    for idx, pt in enumerate(sample_points):
        x = np.asarray(pt, dtype=float)
        for slot, fns in enumerate((antisym, anchor, jacobi)):
            for fn in fns:
                try:
                    maxima[slot] = max(maxima[slot], abs(fn(x)))
                except (ArithmeticError, ValueError) as exc:
                    errors.append(f"point {idx}: {exc}")
    return ValidationReport(maxima[0], maxima[1], maxima[2], tol, errors)


# ---------------------------------------------------------------------------
# The unit group of Hom(TM, A)
# ---------------------------------------------------------------------------


def hom_group_multiply(spec: AlgebroidSpec, phi: HomTMA, psi: HomTMA, x):
    """Evaluate the product Phi + Psi - Phi o rho o Psi at a base point.

    Returns the m x n value and a flag telling whether id + rho o Phi is
    numerically invertible there (the condition for Phi to be a unit).
    """
    x = np.asarray(x, dtype=float)
    p = np.array([[f.eval(x) for f in row] for row in phi.entries])
    s = np.array([[f.eval(x) for f in row] for row in psi.entries])
    rho = spec.anchor_at(x)
    value = p + s - p @ rho @ s
    gate = np.eye(spec.n) + rho @ p
    from .linalg import numerical_rank

    invertible = numerical_rank(gate, 1e-9) == spec.n
    return value, invertible


# ---------------------------------------------------------------------------
# Serialization (JSON document, the on-disk contract)
# ---------------------------------------------------------------------------


def spec_to_dict(spec: AlgebroidSpec) -> dict:
    structure = []
    for k in range(spec.m):
        for i in range(spec.m):
            for j in range(i + 1, spec.m):
                f = spec.structure[k][i][j]
                if not f.is_zero:
                    structure.append({"i": i, "j": j, "k": k, "expr": str(f)})
    return {
        "schema": 1,
        "name": spec.name,
        "n": spec.n,
        "m": spec.m,
        "coords": list(spec.base_coords),
        "anchor": [[str(f) for f in row] for row in spec.anchor],
        "structure": structure,
    }


def spec_from_dict(doc: dict) -> AlgebroidSpec:
    if not isinstance(doc, dict):
        raise SpecFormatError("spec document must be a JSON object")
    try:
        coords = list(doc["coords"])
        n = int(doc["n"])
        m = int(doc["m"])
        anchor = doc["anchor"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"missing or malformed key: {exc}") from exc
    if len(coords) != n:
        raise SpecFormatError(f"coords has {len(coords)} names but n={n}", "coords")
    if len(anchor) != n or any(len(row) != m for row in anchor):
        raise SpecFormatError(f"anchor must be {n}x{m}", "anchor")

    structure = [[["0"] * m for _ in range(m)] for _ in range(m)]
    for pos, entry in enumerate(doc.get("structure", [])):
        loc = f"structure[{pos}]"
        try:
            i, j, k, text = entry["i"], entry["j"], entry["k"], entry["expr"]
        except (KeyError, TypeError) as exc:
            raise SpecFormatError(f"entry needs i, j, k, expr: {exc}", loc) from exc
        if not (0 <= i < m and 0 <= j < m and 0 <= k < m):
            raise SpecFormatError(f"indices out of range for m={m}", loc)
        if i >= j:
            raise SpecFormatError(
                "entries require i < j (the transposes follow by antisymmetry)", loc
            )
        structure[k][i][j] = text
        structure[k][j][i] = f"neg({text})"

    return AlgebroidSpec(
        coords, anchor, structure, name=str(doc.get("name", "algebroid"))
    )


def load_spec(path) -> AlgebroidSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"invalid JSON: {exc}", str(path)) from exc
    return spec_from_dict(doc)


def save_spec(spec: AlgebroidSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")
