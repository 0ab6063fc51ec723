"""2D symplectic surfaces in global coordinates and their Poisson calculus.

The surface kinds are the plane R^2 and the flat torus [0,Lx) x [0,Ly).
The symplectic form is omega = w(x,y) dx^dy with w > 0, and the chart
rotation J(u) = (-u_y, u_x) supplies the compatible metric
g(u, v) = omega(u, Jv) = w * (u . v).

Sign convention, fixed once for the whole package: the Hamiltonian field
of f is the unique X_f with i_{X_f} omega = df, i.e.

    X_f = (f_y / w, -f_x / w),      {f, g} = df(X_g) = (f_x g_y - f_y g_x) / w.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expressions as ex
from .errors import DegenerateLoop, ExpressionError

TANGENT_FLOOR = 1e-14


@dataclass(frozen=True)
class ScalarField:
    """Real scalar field on the chart, with an exact or finite-difference gradient.

    ``fn`` and ``grad_fn`` broadcast over numpy arrays.  When ``grad_fn`` is
    None, gradients fall back to central differences with step ``h_fd``.
    """

    fn: Callable
    grad_fn: Optional[Callable] = None
    h_fd: float = 1e-4
    source: Optional[str] = None
    ast: Optional[tuple] = field(default=None, repr=False)

    def __call__(self, x, y):
        return self.fn(x, y)

    def grad(self, x, y):
        if self.grad_fn is not None:
            return self.grad_fn(x, y)
        h = self.h_fd
        gx = (self.fn(x + h, y) - self.fn(x - h, y)) / (2.0 * h)
        gy = (self.fn(x, y + h) - self.fn(x, y - h)) / (2.0 * h)
        return gx, gy

    @classmethod
    def from_expression(cls, text, h_fd=1e-4):
        node = ex.simplify(ex.parse(text))
        dx = ex.simplify(ex.differentiate(node, "x"))
        dy = ex.simplify(ex.differentiate(node, "y"))

        def fn(x, y, _n=node):
            return np.broadcast_arrays(ex.evaluate(_n, x, y), x)[0] * 1.0

        def grad_fn(x, y, _dx=dx, _dy=dy):
            gx = np.broadcast_arrays(ex.evaluate(_dx, x, y), x)[0] * 1.0
            gy = np.broadcast_arrays(ex.evaluate(_dy, x, y), x)[0] * 1.0
            return gx, gy

        return cls(fn=fn, grad_fn=grad_fn, h_fd=h_fd, source=text, ast=node)

    @classmethod
    def constant(cls, value):
        value = float(value)
        return cls(
            fn=lambda x, y: np.full(np.broadcast(x, y).shape, value) if np.ndim(x) or np.ndim(y) else value,
            grad_fn=lambda x, y: (np.zeros(np.broadcast(x, y).shape), np.zeros(np.broadcast(x, y).shape)),
            source=repr(value),
            ast=("const", value),
        )

    @classmethod
    def from_callable(cls, fn, grad_fn=None, h_fd=1e-4):
        return cls(fn=fn, grad_fn=grad_fn, h_fd=h_fd)

    def _combine(self, other, tag, fn):
        if not isinstance(other, ScalarField):
            other = ScalarField.constant(other)
        grad_fn = None
        if self.grad_fn is not None and other.grad_fn is not None:
            if tag == "add":
                def grad_fn(x, y, _a=self, _b=other):
                    ax, ay = _a.grad(x, y)
                    bx, by = _b.grad(x, y)
                    return ax + bx, ay + by
            else:
                def grad_fn(x, y, _a=self, _b=other):
                    ax, ay = _a.grad(x, y)
                    bx, by = _b.grad(x, y)
                    av = _a(x, y)
                    bv = _b(x, y)
                    return ax * bv + av * bx, ay * bv + av * by
        ast = None
        if self.ast is not None and other.ast is not None:
            ast = ex.simplify((tag, self.ast, other.ast))
        return ScalarField(fn=fn, grad_fn=grad_fn, h_fd=self.h_fd, ast=ast,
                           source=ex.to_string(ast) if ast is not None else None)

    def __add__(self, other):
        o = other if isinstance(other, ScalarField) else ScalarField.constant(other)
        return self._combine(o, "add", lambda x, y: self.fn(x, y) + o.fn(x, y))

    def __mul__(self, other):
        o = other if isinstance(other, ScalarField) else ScalarField.constant(other)
        return self._combine(o, "mul", lambda x, y: self.fn(x, y) * o.fn(x, y))

    __radd__ = __add__
    __rmul__ = __mul__

    def __pow__(self, k):
        if int(k) != k:
            raise ExpressionError("field powers must have integer exponents")
        k = int(k)
        out = ScalarField.constant(1.0)
        for _ in range(abs(k)):
            out = out * self
        if k < 0:
            raise ExpressionError("negative field powers are not supported")
        return out


def field_is_periodic(f, surface, tol=1e-9):
    """Whether f is compatible with the surface's periodic identification."""
    if surface.kind != "torus":
        return True
    lx, ly = surface.periods
    if f.ast is not None:
        if ex.polynomial_degree(f.ast) > 0:
            return False
        two_pi = 2.0 * np.pi
        for a, b in ex.trig_frequencies(f.ast):
            ma = a * lx / two_pi
            mb = b * ly / two_pi
            if abs(ma - round(ma)) > 1e-9 or abs(mb - round(mb)) > 1e-9:
                return False
        return True
    rng = np.random.default_rng(0)
    xs = rng.uniform(0.0, lx, 16)
    ys = rng.uniform(0.0, ly, 16)
    base = f(xs, ys)
    return bool(
        np.max(np.abs(f(xs + lx, ys) - base)) <= tol
        and np.max(np.abs(f(xs, ys + ly) - base)) <= tol
    )


class SymplecticSurface:
    """Plane or flat torus carrying omega = w dx^dy and an optional potential.

    The potential is a pair of coefficient callables (a_x, a_y) with
    d(alpha) = omega on the chart; for closed contractible loops the number
    exp(2*pi*i * loop integral of alpha) is the holonomy of the level-1
    connection with curvature 2*pi*i*omega.  A default potential is attached
    only for the unit density (plane: (x dy - y dx)/2, torus: x dy on a lift).
    """

    def __init__(self, kind, omega_density=None, potential=None, periods=None):
        if kind not in ("plane", "torus"):
            raise ValueError(f"unknown surface kind {kind!r}")
        self.kind = kind
        self.omega_density = omega_density
        if kind == "torus":
            if periods is None:
                raise ValueError("torus surface requires periods (Lx, Ly)")
            lx, ly = float(periods[0]), float(periods[1])
            if lx <= 0 or ly <= 0:
                raise ValueError("periods must be positive")
            self.periods = (lx, ly)
        else:
            if periods is not None:
                raise ValueError("plane surface takes no periods")
            self.periods = None
        if potential is None and omega_density is None:
            if kind == "plane":
                potential = (lambda x, y: -0.5 * y, lambda x, y: 0.5 * x)
            else:
                potential = (lambda x, y: np.zeros_like(np.asarray(x, dtype=float)),
                             lambda x, y: np.asarray(x, dtype=float))
        self.potential = potential
        if omega_density is not None and field_is_periodic(omega_density, self, tol=1e-12) is False:
            raise ValueError("omega density must be periodic on a torus")

    @classmethod
    def plane(cls, omega_density=None, potential=None):
        return cls("plane", omega_density=omega_density, potential=potential)

    @classmethod
    def torus(cls, lx, ly, omega_density=None, potential=None):
        return cls("torus", omega_density=omega_density, potential=potential, periods=(lx, ly))

    def density(self, x, y):
        if self.omega_density is None:
            return np.ones(np.broadcast(x, y).shape) if (np.ndim(x) or np.ndim(y)) else 1.0
        w = np.asarray(self.omega_density(x, y), dtype=float)
        if np.any(w <= 0.0):
            raise ValueError("omega density must be positive at every sampled point")
        return w

    def potential_values(self, x, y):
        if self.potential is None:
            raise ValueError(
                "surface has no symplectic potential; supply one matching the omega density"
            )
        ax, ay = self.potential
        return np.asarray(ax(x, y), dtype=float), np.asarray(ay(x, y), dtype=float)

    def wrap(self, points):
        """Map chart points into the fundamental domain (torus only)."""
        if self.kind != "torus":
            return np.asarray(points, dtype=float)
        pts = np.array(points, dtype=float)
        pts[..., 0] %= self.periods[0]
        pts[..., 1] %= self.periods[1]
        return pts

    def prequantization_number(self, grid=256):
        """Lx * Ly * mean(w); must be a positive integer for holonomy levels."""
        if self.kind != "torus":
            raise ValueError("prequantization number is defined for the torus")
        lx, ly = self.periods
        xs = (np.arange(grid) + 0.5) * lx / grid
        ys = (np.arange(grid) + 0.5) * ly / grid
        xg, yg = np.meshgrid(xs, ys, indexing="ij")
        return lx * ly * float(np.mean(self.density(xg, yg)))

    def check_potential(self, n_samples=64, h=1e-5, seed=0):
        """Max |curl(alpha) - w| over random sample points (finite differences)."""
        rng = np.random.default_rng(seed)
        if self.kind == "torus":
            xs = rng.uniform(0.1, self.periods[0] - 0.1, n_samples)
            ys = rng.uniform(0.1, self.periods[1] - 0.1, n_samples)
        else:
            xs = rng.uniform(-2.0, 2.0, n_samples)
            ys = rng.uniform(-2.0, 2.0, n_samples)
        _, ay_xp = self.potential_values(xs + h, ys)
        _, ay_xm = self.potential_values(xs - h, ys)
        ax_yp, _ = self.potential_values(xs, ys + h)
        ax_ym, _ = self.potential_values(xs, ys - h)
        curl = (ay_xp - ay_xm) / (2 * h) - (ax_yp - ax_ym) / (2 * h)
        return float(np.max(np.abs(curl - self.density(xs, ys))))


def rotate90(v):
    """The chart rotation J: (u_x, u_y) -> (-u_y, u_x), applied along the last axis."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


class CompatibleStructure:
    """Hermitian triple (g, J, omega) induced by the chart rotation J."""

    def __init__(self, surface):
        self.surface = surface

    def j(self, v):
        return rotate90(v)

    def metric(self, u, v, x, y):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.surface.density(x, y) * (u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1])

    def omega(self, u, v, x, y):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.surface.density(x, y) * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])


def hamiltonian_vector_field(f, surface, p):
    """X_f = (f_y / w, -f_x / w) at p; p may be a single point or an (N, 2) array."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    gx, gy = f.grad(x, y)
    w = surface.density(x, y)
    return np.stack([np.asarray(gy) / w, -np.asarray(gx) / w], axis=-1)


def poisson_bracket(f, g, surface, p):
    """{f, g}(p) = df(X_g)(p) = (f_x g_y - f_y g_x) / w."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    fx, fy = f.grad(x, y)
    gx, gy = g.grad(x, y)
    return (np.asarray(fx) * gy - np.asarray(fy) * gx) / surface.density(x, y)


def poisson_bracket_field(f, g, surface):
    """The bracket {f, g} as a ScalarField.

    When both inputs carry expression ASTs (and the density is unit or
    expression-backed) the result is composed symbolically, so its values and
    gradient are exact.  Otherwise values use the exact/analytic gradients of
    f and g, and the gradient of the bracket falls back to finite differences.
    """
    w = surface.omega_density
    if f.ast is not None and g.ast is not None and (w is None or w.ast is not None):
        node = ex.poisson_node(f.ast, g.ast, None if w is None else w.ast)
        return ScalarField.from_expression(ex.to_string(node))

    def fn(x, y):
        fx, fy = f.grad(x, y)
        gx, gy = g.grad(x, y)
        return (np.asarray(fx) * gy - np.asarray(fy) * gx) / surface.density(x, y)

    return ScalarField(fn=fn)


def tangential_normal_split(v, t, p=None):
    """Split v into its metric projection onto span(t) and the complement.

    The metric is conformal to the Euclidean one, so the projection weight
    cancels and p is accepted only for interface symmetry.  Broadcasts over
    leading axes; raises DegenerateLoop when a tangent collapses.
    """
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = np.sum(t * t, axis=-1)
    if np.min(tt) < TANGENT_FLOOR**2:
        raise DegenerateLoop("collapsed loop segment: tangent below 1e-14")
    coeff = np.sum(v * t, axis=-1) / tt
    v_hor = coeff[..., None] * t
    return v_hor, v - v_hor


def tangential_coefficient(v, t):
    """Coefficient u with v_hor = u * t; same degeneracy guard as the split."""
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    tt = np.sum(t * t, axis=-1)
    if np.min(tt) < TANGENT_FLOOR**2:
        raise DegenerateLoop("collapsed loop segment: tangent below 1e-14")
    return np.sum(v * t, axis=-1) / tt
