"""Market model primitives: coefficient functions with constant tails, the
uncertainty rectangle, power utility, and grid specifications.

Coefficient functions are restricted to a parametric family (constant,
smooth-ramp, clamped piecewise-linear) whose members are bounded with
bounded derivative and are exactly constant outside [-N, N].  That makes
the standing assumptions checkable by construction instead of by trusting
an arbitrary callable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CoefficientFn",
    "MarketModel",
    "UncertaintyRectangle",
    "PowerUtility",
    "GridSpec",
    "default_y_radius",
    "ValidationIssue",
    "ValidationReport",
    "validate_assumptions",
]

TAIL_TOL = 1e-12  # exact-tail checks (constant tails are algebraically exact)


@dataclass(frozen=True)
class CoefficientFn:
    """Scalar coefficient y -> f(y), constant outside [-N, N].

    kind:
      * "constant":       f == left == right everywhere
      * "smooth-ramp":    C^1 smoothstep from left (y <= -N) to right (y >= N)
      * "piecewise-linear-clamped": linear interpolation through knots inside
        (-N, N), clamped to the tail values outside
    """

    kind: str
    left: float
    right: float
    tail_radius: float = 1.0
    knots: tuple[tuple[float, float], ...] = ()

    # The ramp is the 9th-degree smoothstep: C^4 at the tail junctions, so the
    # solver's a-posteriori residual is not polluted by curvature jumps of the
    # PDE forcing at |y| = N.  Symmetric: f(0) = (left + right) / 2.

    def __post_init__(self):
        if self.kind not in ("constant", "smooth-ramp", "piecewise-linear-clamped"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if not self.tail_radius > 0:
            raise ValueError("tail_radius must be > 0")
        if self.kind == "constant" and self.left != self.right:
            raise ValueError("constant coefficient needs left == right")
        if self.kind == "piecewise-linear-clamped":
            ys = [k[0] for k in self.knots]
            if any(abs(y) >= self.tail_radius for y in ys):
                raise ValueError("knots must lie strictly inside (-N, N)")
            if sorted(ys) != ys or len(set(ys)) != len(ys):
                raise ValueError("knot locations must be strictly increasing")
        elif self.knots:
            raise ValueError(f"knots are only valid for piecewise-linear-clamped, not {self.kind}")

    @classmethod
    def constant(cls, value: float) -> "CoefficientFn":
        return cls("constant", float(value), float(value))

    @classmethod
    def ramp(cls, left: float, right: float, tail_radius: float) -> "CoefficientFn":
        return cls("smooth-ramp", float(left), float(right), float(tail_radius))

    @classmethod
    def piecewise(cls, left: float, right: float, tail_radius: float,
                  knots) -> "CoefficientFn":
        return cls("piecewise-linear-clamped", float(left), float(right),
                   float(tail_radius), tuple((float(a), float(b)) for a, b in knots))

    def _grid(self):
        n = self.tail_radius
        ys = [-n] + [k[0] for k in self.knots] + [n]
        vs = [self.left] + [k[1] for k in self.knots] + [self.right]
        return np.asarray(ys), np.asarray(vs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        n = self.tail_radius
        if self.kind == "constant":
            out = np.full_like(y, self.left)
        elif self.kind == "smooth-ramp":
            z = np.clip((y + n) / (2.0 * n), 0.0, 1.0)
            s = z**5 * (126.0 + z * (-420.0 + z * (540.0 + z * (-315.0 + 70.0 * z))))
            out = self.left + (self.right - self.left) * s
        else:
            ys, vs = self._grid()
            out = np.interp(y, ys, vs)
        # constant tails are exact, not interpolated
        out = np.where(y <= -n, self.left, out)
        out = np.where(y >= n, self.right, out)
        return out if out.ndim else float(out)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        n = self.tail_radius
        if self.kind == "constant":
            out = np.zeros_like(y)
        elif self.kind == "smooth-ramp":
            z = np.clip((y + n) / (2.0 * n), 0.0, 1.0)
            out = (self.right - self.left) * 630.0 * z**4 * (1.0 - z) ** 4 / (2.0 * n)
        else:
            ys, vs = self._grid()
            slopes = np.diff(vs) / np.diff(ys)
            idx = np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        out = np.where(np.abs(y) >= n, 0.0, out)
        return out if out.ndim else float(out)

    def bound(self) -> float:
        """Upper bound for |f| (exact for this family: extrema at tails/knots)."""
        vals = [abs(self.left), abs(self.right)] + [abs(v) for _, v in self.knots]
        return max(vals)


@dataclass(frozen=True)
class MarketModel:
    """Coefficients of the traded/non-traded pair: excess drift b(y), the
    non-traded asset drift beta(y), short rate r(y) >= 0, correlation rho."""

    b: CoefficientFn
    beta: CoefficientFn
    r: CoefficientFn
    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.r.left < 0 or self.r.right < 0 or any(v < 0 for _, v in self.r.knots):
            raise ValueError("short rate r must be nonnegative")

    @property
    def tail_radius(self) -> float:
        return max(self.b.tail_radius, self.beta.tail_radius, self.r.tail_radius)


@dataclass(frozen=True)
class UncertaintyRectangle:
    """Admissible (drift perturbation, volatility) set [mu-, mu+] x [sigma-, sigma+].

    sigma_minus must be strictly positive: the closed-form branch values divide
    by sigma_minus^2 and a zero lower bound degenerates the minimized ratio.
    """

    mu_minus: float
    mu_plus: float
    sigma_minus: float
    sigma_plus: float

    def __post_init__(self):
        if self.mu_minus > self.mu_plus:
            raise ValueError("mu_minus must be <= mu_plus")
        if not 0.0 < self.sigma_minus <= self.sigma_plus:
            raise ValueError("need 0 < sigma_minus <= sigma_plus")

    @property
    def sigma_mid(self) -> float:
        return 0.5 * (self.sigma_minus + self.sigma_plus)

    def contains(self, mu: float, sigma: float, tol: float = 1e-12) -> bool:
        return (self.mu_minus - tol <= mu <= self.mu_plus + tol
                and self.sigma_minus - tol <= sigma <= self.sigma_plus + tol)


@dataclass(frozen=True)
class PowerUtility:
    """U(x) = x^q / q with q < 1, q != 0 (strictly increasing, strictly concave)."""

    q: float

    def __post_init__(self):
        if not self.q < 1 or self.q == 0:
            raise ValueError("power utility needs q < 1 and q != 0")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.q / self.q


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid for the value-exponent PDE.

    horizon T with n_t levels (dt = T/(n_t-1)); y in [-y_radius, y_radius]
    with n_y nodes; theta is the implicitness weight of the diffusion term.
    """

    horizon: float
    n_t: int
    n_y: int
    y_radius: float
    theta: float = 0.5

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.n_t < 2 or self.n_y < 3:
            raise ValueError("need n_t >= 2 and n_y >= 3")
        if not self.y_radius > 0:
            raise ValueError("y_radius must be > 0")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    @property
    def dt(self) -> float:
        return self.horizon / (self.n_t - 1)

    @property
    def dy(self) -> float:
        return 2.0 * self.y_radius / (self.n_y - 1)

    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_t)

    def y_nodes(self) -> np.ndarray:
        return np.linspace(-self.y_radius, self.y_radius, self.n_y)


def default_y_radius(m: MarketModel, margin: float = 2.0) -> float:
    """Computational radius N' = N + margin: tail data is exact only where the
    coefficients are constant, and the extra margin buffers the Dirichlet cut."""
    return m.tail_radius + margin


@dataclass(frozen=True)
class ValidationIssue:
    assumption: str
    witness_y: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()
    checked_points: int = 0

    @property
    def passed(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        if self.passed:
            return f"all assumptions hold ({self.checked_points} sample points)"
        lines = [f"{len(self.issues)} violation(s):"]
        for it in self.issues:
            lines.append(f"  {it.assumption} at y={it.witness_y:g}: {it.detail}")
        return "\n".join(lines)


def validate_assumptions(m: MarketModel, k: UncertaintyRectangle,
                         samples: int = 101) -> ValidationReport:
    """Check the standing assumptions; violations are returned as data, never raised.

    A1 boundedness, A2 flat derivative on the tails, r >= 0, and
    A3: b(y) + mu_minus >= 0 for all y.  Tail points are checked exactly
    (tolerance 1e-12), interior points by sampling.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    issues: list[ValidationIssue] = []
    n = m.tail_radius
    interior = np.linspace(-n, n, samples)
    tails = np.array([-10.0 * n - 1.0, -n - 1.0, -n, n, n + 1.0, 10.0 * n + 1.0])
    ys = np.concatenate([tails, interior])

    for name, f in (("b", m.b), ("beta", m.beta), ("r", m.r)):
        fn = f.tail_radius
        # A2/tail flatness: exact tail values and zero derivative beyond the radius
        for y in (-fn - 1.0, -10.0 * fn - 1.0):
            if abs(float(f(y)) - f.left) > TAIL_TOL:
                issues.append(ValidationIssue(
                    "A2-tail", y, f"{name}({y:g}) != left tail value {f.left:g}"))
        for y in (fn + 1.0, 10.0 * fn + 1.0):
            if abs(float(f(y)) - f.right) > TAIL_TOL:
                issues.append(ValidationIssue(
                    "A2-tail", y, f"{name}({y:g}) != right tail value {f.right:g}"))
        dy_tail = np.abs(f.derivative(np.array([-fn, fn, -fn - 2.0, fn + 2.0])))
        if np.any(dy_tail > TAIL_TOL):
            bad = float(np.array([-fn, fn, -fn - 2.0, fn + 2.0])[int(np.argmax(dy_tail))])
            issues.append(ValidationIssue(
                "A2-derivative", bad, f"{name}' not zero on the tail"))
        # A1 boundedness against the constructive bound
        vals = np.abs(np.asarray(f(ys)))
        if np.any(vals > f.bound() + TAIL_TOL):
            bad = float(ys[int(np.argmax(vals))])
            issues.append(ValidationIssue(
                "A1-bounded", bad, f"|{name}| exceeds its constructive bound"))

    r_vals = np.asarray(m.r(ys))
    if np.any(r_vals < -TAIL_TOL):
        bad = float(ys[int(np.argmin(r_vals))])
        issues.append(ValidationIssue("r>=0", bad, f"r({bad:g}) = {float(m.r(bad)):g} < 0"))

    a3 = np.asarray(m.b(ys)) + k.mu_minus
    if np.any(a3 < -TAIL_TOL):
        bad = float(ys[int(np.argmin(a3))])
        issues.append(ValidationIssue(
            "A3", bad, f"b({bad:g}) + mu_minus = {float(m.b(bad)) + k.mu_minus:g} < 0"))

    return ValidationReport(tuple(issues), checked_points=len(ys))
