"""Numerical symplectic-leaf geometry on A*.

Sign ledger (normative for everything in this module and its tests):

  * bracket        {F, G} = Pi(dF, dG), with Pi_{xi_i x^a} = +rho^a_i and
                   Pi_{xi_i xi_j} = c^k_ij xi_k;
  * Hamiltonian    X_F(G) = {F, G}, so X_F^A = Pi^{BA} d_B F;
  * leaf form      omega(X_F, X_G) = {F, G}; numerically
                   omega(v, w) = eta_v^T Pi eta_w where Pi eta = v;
  * curvature      R(d/dx^a, d/dx^b) = -[lambda_a, lambda_b]_A for a
                   splitting lambda (coordinate fields commute);
  * magnetic form  on a magnetic extension with isotropy coordinate s the
                   leaf form on the (x, p) block is [[-s B, -I], [I, 0]].

Leaves are traced inside a single chart box by composing Hamiltonian flows
of the coordinate generators {xi_i} and {x^a} with a seeded random schedule;
classical RK4 with a fixed step keeps the error budget predictable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .algebroid import AlgebroidSpec, Section, bracket_sections, differential_of, section
from .expr import ScalarField, constant, coordinate
from .lie_poisson import (
    DualPoint,
    bivector_at,
    bivector_fields,
    hamiltonian_fields,
    lift_to_dual,
    linear_function,
    _ambient,
)
from .linalg import numerical_rank, kernel_basis

__all__ = [
    "DEFAULT_CHART_BOX",
    "TraceConfig",
    "LeafTrace",
    "TraceError",
    "LeafTangencyError",
    "leaf_dimension",
    "trace_leaf",
    "integrate_hamiltonian",
    "IsotropyAlgebra",
    "isotropy_algebra",
    "Splitting",
    "splitting",
    "CurvatureResult",
    "curvature_at",
    "leaf_form_at",
    "MagneticFormReport",
    "magnetic_form_check",
    "FiberBundleReport",
    "fiber_bundle_check",
    "tangent_lift_check",
    "write_trace_csv",
]

DEFAULT_CHART_BOX = (-10.0, 10.0)


class TraceError(RuntimeError):
    """A flow step produced non-finite values."""

    def __init__(self, flow_index: int, message: str = "non-finite value"):
        super().__init__(f"flow {flow_index}: {message}")
        self.flow_index = flow_index


class LeafTangencyError(ValueError):
    """A vector handed to the leaf form is not tangent to the leaf."""


@dataclass(frozen=True)
class TraceConfig:
    seed: int = 0
    step_size: float = 1e-3
    steps_per_flow: int = 25
    flow_count: int = 400
    chart_box: tuple[float, float] = DEFAULT_CHART_BOX

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.steps_per_flow <= 0 or self.flow_count <= 0:
            raise ValueError("steps_per_flow and flow_count must be positive")
        lo, hi = self.chart_box
        if not lo < hi:
            raise ValueError("chart box must be a nonempty interval")


@dataclass
class LeafTrace:
    """Point cloud produced by composing Hamiltonian flows of generators."""

    points: np.ndarray  # (N, n+m) ambient rows
    seed: int
    step_size: float
    steps_per_flow: int
    flow_count: int
    truncated: bool
    spec: AlgebroidSpec

    def dual_points(self):
        n = self.spec.n
        return [DualPoint(row[:n], row[n:]) for row in self.points]

    @property
    def base_points(self) -> np.ndarray:
        return self.points[:, : self.spec.n]

    @property
    def fiber_points(self) -> np.ndarray:
        return self.points[:, self.spec.n :]


def leaf_dimension(spec: AlgebroidSpec, pt, tol: float = 1e-9) -> int:
    """Rank of the Lie-Poisson bivector at ``pt``."""
    return numerical_rank(bivector_at(spec, pt), tol)


def _generator_fns(spec: AlgebroidSpec):
    """Compiled Hamiltonian vector fields of the coordinate generators.

    X_{q^A} has components Pi[A][.], i.e. row A of the bivector.
    """

    def build():
        pi = bivector_fields(spec)
        return [[f.compile() for f in row] for row in pi]

    return spec.cached("generator_fns", build)


def _rk4_step(fns, y, h, sign):
    def f(z):
        return sign * np.array([fn(z) for fn in fns])

    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def trace_leaf(spec: AlgebroidSpec, start, cfg: TraceConfig = TraceConfig()) -> LeafTrace:
    """Sample the leaf through ``start`` with a seeded flow schedule.

    Each flow picks a generator uniformly from {xi_i} and {x^a} with a random
    sign and integrates it for ``steps_per_flow`` RK4 steps.  The trace stops
    early when a step would leave the chart box (the last interior point is
    kept) and raises :class:`TraceError` on non-finite values.
    """
    y = _ambient(spec, start)
    lo, hi = cfg.chart_box
    if np.any(y < lo) or np.any(y > hi):
        raise ValueError("start point lies outside the chart box")
    gens = _generator_fns(spec)
    rng = np.random.default_rng(cfg.seed)
    points = [y.copy()]
    truncated = False
    for flow in range(cfg.flow_count):
        gi = int(rng.integers(0, len(gens)))
        sign = 1.0 if int(rng.integers(0, 2)) else -1.0
        fns = gens[gi]
        for _ in range(cfg.steps_per_flow):
            try:
                y_new = _rk4_step(fns, y, cfg.step_size, sign)
            except (ArithmeticError, ValueError) as exc:
                raise TraceError(flow, str(exc)) from exc
            if not np.all(np.isfinite(y_new)):
                raise TraceError(flow)
            if np.any(y_new < lo) or np.any(y_new > hi):
                truncated = True
                break
            y = y_new
            points.append(y.copy())
        if truncated:
            break
    return LeafTrace(
        np.array(points),
        cfg.seed,
        cfg.step_size,
        cfg.steps_per_flow,
        cfg.flow_count,
        truncated,
        spec,
    )


def integrate_hamiltonian(
    spec: AlgebroidSpec, f: ScalarField, start, step_size: float, steps: int
) -> np.ndarray:
    """RK4 path of X_F from ``start``; returns (steps+1, n+m) ambient rows."""
    fns = [c.compile() for c in hamiltonian_fields(spec, f)]
    y = _ambient(spec, start)
    out = [y.copy()]
    for k in range(steps):
        try:
            y = _rk4_step(fns, y, step_size, 1.0)
        except (ArithmeticError, ValueError) as exc:
            raise TraceError(k, str(exc)) from exc
        if not np.all(np.isfinite(y)):
            raise TraceError(k)
        out.append(y.copy())
    return np.array(out)


# ---------------------------------------------------------------------------
# Isotropy algebras
# ---------------------------------------------------------------------------


@dataclass
class IsotropyAlgebra:
    basis: np.ndarray  # (m, k) columns spanning ker rho(x)
    structure_constants: np.ndarray  # (k, k, k), [b_p, b_q] = f^r_pq b_r
    closure_defect: float


def isotropy_algebra(spec: AlgebroidSpec, x, tol: float = 1e-9) -> IsotropyAlgebra:
    """ker rho(x) with the pointwise bracket expressed in an orthonormal basis.

    The closure defect is the norm of the bracket component outside the
    kernel; it vanishes at constant-rank points.
    """
    x = np.asarray(x, dtype=float)
    rho = spec.anchor_at(x)
    vectors = kernel_basis(rho, tol)
    k = len(vectors)
    basis = np.array(vectors).T if k else np.zeros((spec.m, 0))
    c = spec.structure_at(x)
    constants = np.zeros((k, k, k))
    defect = 0.0
    for p in range(k):
        for q in range(k):
            w = np.einsum("kij,i,j->k", c, basis[:, p], basis[:, q])
            coeffs = basis.T @ w
            constants[:, p, q] = coeffs
            defect = max(defect, float(np.linalg.norm(w - basis @ coeffs)))
    return IsotropyAlgebra(basis, constants, defect)


# ---------------------------------------------------------------------------
# Splittings and curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Splitting:
    """lambda: TM -> A with lambda(d/dx^a) = lambda^i_a e_i; entries[i][a]."""

    entries: tuple[tuple[ScalarField, ...], ...]

    def column(self, a) -> tuple[ScalarField, ...]:
        return tuple(row[a] for row in self.entries)


def splitting(spec: AlgebroidSpec, rows) -> Splitting:
    from .algebroid import hom_tma

    return Splitting(hom_tma(spec, rows).entries)


@dataclass
class CurvatureResult:
    values: np.ndarray  # (n, n, m): R(d_a, d_b) in the frame, antisymmetric in (a, b)
    kernel_defect: float  # max |rho(x) . R(d_a, d_b)|


def curvature_at(spec: AlgebroidSpec, lam: Splitting, x) -> CurvatureResult:
    """R(d/dx^a, d/dx^b)(x) = -[lambda_a, lambda_b]_A(x).

    Requires rho(x) lambda(x) = id (a genuine splitting over the chart); the
    kernel defect reports how far the values are from ker rho, which the
    anchor-morphism axiom forces to vanish.
    """
    x = np.asarray(x, dtype=float)
    rho = spec.anchor_at(x)
    lam_val = np.array([[f.eval(x) for f in row] for row in lam.entries])
    if np.max(np.abs(rho @ lam_val - np.eye(spec.n))) > 1e-9:
        raise ValueError("not a splitting: rho(x) lambda(x) != id")
    values = np.zeros((spec.n, spec.n, spec.m))
    defect = 0.0
    for a in range(spec.n):
        for b in range(a + 1, spec.n):
            br = bracket_sections(
                spec, Section(lam.column(a)), Section(lam.column(b))
            )
            vec = -np.array([f.eval(x) for f in br.components])
            values[a, b] = vec
            values[b, a] = -vec
            defect = max(defect, float(np.linalg.norm(rho @ vec)))
    return CurvatureResult(values, defect)


# ---------------------------------------------------------------------------
# Leaf symplectic forms
# ---------------------------------------------------------------------------


def leaf_form_at(
    spec: AlgebroidSpec, pt, v1, v2, tol: float = 1e-8, solver: str = "lstsq"
) -> float:
    """Leaf form omega(v1, v2) at ``pt`` for vectors tangent to the leaf.

    Solves Pi eta_i = v_i (least squares) and returns eta_1^T Pi eta_2; the
    answer does not depend on the representative because kernel directions of
    the antisymmetric Pi pair to zero.  Vectors outside the range of Pi raise
    :class:`LeafTangencyError`.
    """
    pi = bivector_at(spec, pt)
    etas = []
    for v in (v1, v2):
        v = np.asarray(v, dtype=float)
        if solver == "pinv":
            eta = np.linalg.pinv(pi) @ v
        else:
            eta = np.linalg.lstsq(pi, v, rcond=None)[0]
        residual = float(np.linalg.norm(pi @ eta - v))
        scale = 1.0 + float(np.linalg.norm(v))
        if residual > tol * scale:
            raise LeafTangencyError(
                f"vector not tangent to the leaf (residual {residual:.3e})"
            )
        etas.append(eta)
    return float(etas[0] @ pi @ etas[1])


@dataclass
class MagneticFormReport:
    max_deviation: float
    computed: np.ndarray  # leaf form on the (x, p) block directions
    target: np.ndarray  # [[-s B, -I], [I, 0]]


def magnetic_form_check(
    spec: AlgebroidSpec, pt, tol: float = 1e-8
) -> MagneticFormReport:
    """Compare the leaf form on a magnetic extension with its closed form.

    Requires the magnetic-extension shape (rank n+1, anchor [id; 0]); B is
    read off the structure functions, and s is the isotropy fiber coordinate
    of ``pt``.  The expected block matrix over (x, p) is [[-s B, -I], [I, 0]].
    """
    n, m = spec.n, spec.m
    if m != n + 1:
        raise ValueError("magnetic extensions have bundle rank n + 1")
    vec = _ambient(spec, pt)
    x = vec[:n]
    rho = spec.anchor_at(x)
    expected_rho = np.hstack([np.eye(n), np.zeros((n, 1))])
    if np.max(np.abs(rho - expected_rho)) > 1e-9:
        raise ValueError("anchor is not [id; 0]; not a magnetic extension")
    c = spec.structure_at(x)
    off_block = c.copy()
    off_block[n, :n, :n] = 0.0
    if np.max(np.abs(off_block)) > 1e-9:
        raise ValueError("structure functions outside the B block")
    b = c[n, :n, :n]
    s = vec[n + n]

    dim = n + m
    tangent = []
    for a in range(n):
        e = np.zeros(dim)
        e[a] = 1.0
        tangent.append(e)
    for i in range(n):
        e = np.zeros(dim)
        e[n + i] = 1.0
        tangent.append(e)

    computed = np.zeros((2 * n, 2 * n))
    for p in range(2 * n):
        for q in range(2 * n):
            computed[p, q] = leaf_form_at(spec, vec, tangent[p], tangent[q], tol)
    target = np.block(
        [[-s * b, -np.eye(n)], [np.eye(n), np.zeros((n, n))]]
    )
    return MagneticFormReport(float(np.max(np.abs(computed - target))), computed, target)


# ---------------------------------------------------------------------------
# Fiber-bundle structure and tangent lifts
# ---------------------------------------------------------------------------


@dataclass
class FiberBundleReport:
    spreads: list[float]
    max_spread: float


def fiber_bundle_check(
    spec: AlgebroidSpec, trace: LeafTrace, invariants, tol: float = 1e-6
) -> FiberBundleReport:
    """Spread (max - min) of each invariant function along the trace.

    Invariants are functions on A* (typically isotropy Casimirs); bounded
    spread witnesses the fiber-bundle structure of the leaf, whose isotropy
    data is transported along the base.
    """
    spreads = []
    for f in invariants:
        fn = f.compile()
        values = [fn(row) for row in trace.points]
        spreads.append(float(max(values) - min(values)))
    return FiberBundleReport(spreads, max(spreads, default=0.0))


def tangent_lift_check(spec: AlgebroidSpec, f: ScalarField, points, tol: float = 1e-10) -> float:
    """For a cotangent algebroid of a Poisson chart, compare lifts.

    The Hamiltonian field of l_df must be the complete lift of X_f and the
    Hamiltonian field of p*f the vertical lift, where X_f = rho(df) is the
    Hamiltonian field on the base.  Returns the max defect of both
    comparisons over the points.
    """
    n, m = spec.n, spec.m
    if m != n:
        raise ValueError("tangent-lift check needs a cotangent algebroid (m = n)")
    dc = spec.dual_coords
    df = differential_of(spec, f)
    xf = [
        sum(
            (spec.anchor[a][i] * df[i] for i in range(m)),
            spec.zero_field(),
        )
        for a in range(n)
    ]

    complete = [c.with_coords(dc) for c in xf]
    for j in range(n):
        t = constant(0.0, dc)
        for b, name in enumerate(spec.base_coords):
            d = xf[j].diff(name)
            if d.is_zero:
                continue
            t = t + coordinate(dc[n + b], dc) * d.with_coords(dc)
        complete.append(t)
    vertical = [constant(0.0, dc)] * n + [c.with_coords(dc) for c in xf]

    ham_l = hamiltonian_fields(spec, linear_function(spec, section(spec, df.components)))
    ham_p = hamiltonian_fields(spec, lift_to_dual(spec, f))

    diffs = [
        (a - b).compile() for a, b in zip(ham_l, complete)
    ] + [(a - b).compile() for a, b in zip(ham_p, vertical)]
    worst = 0.0
    for pt in points:
        vec = _ambient(spec, pt)
        for fn in diffs:
            worst = max(worst, abs(fn(vec)))
    return worst


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def write_trace_csv(trace: LeafTrace, path_or_file, spec_hash: str = "") -> None:
    """CSV export: a comment header with provenance, then coordinate rows."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        steps = len(trace.points) - 1
        fh.write(
            f"# spec-hash={spec_hash}, seed={trace.seed}, "
            f"h={float(trace.step_size)!r}, steps={steps}\n"
        )
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace.spec.dual_coords)
        for row in trace.points:
            writer.writerow([repr(float(v)) for v in row])
    finally:
        if own:
            fh.close()


def trace_csv_bytes(trace: LeafTrace, spec_hash: str = "") -> bytes:
    buf = io.StringIO()
    write_trace_csv(trace, buf, spec_hash)
    return buf.getvalue().encode()
