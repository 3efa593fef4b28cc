"""
Invariant reductions of the volume flows.

S^7 (Spin(7) holonomy on R x S^7): a gradient flow of V = y1 y2 y3 y4^4 on
the four-dimensional space of invariant closed 4-forms, written either in
the metric coordinates y or in the cohomology coordinates x.

S^3 x S^3 (G2 holonomy on R x S^3 x S^3): the Hamiltonian flow of
H = 4 y1 y2 y3 - V(rho)^2 on invariant exact 3-forms (x) and 4-forms (y).

Also the constrained critical points giving the squashed 7-sphere and the
nearly Kahler S^3 x S^3, reconstruction of the actual forms so the reduced
quantities can be checked against the general volume functionals, and the
exterior derivative on invariant forms used to confirm the weak holonomy
equations at those critical points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, TextIO, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .config import CSV_DIGITS, IDENTITY_RTOL
from .errors import DimensionError, ParameterError, SingularStateError
from .exterior import Form, hodge_star, invariant_derivative, wedge
from .integrators import Trajectory
from .stability import metric_from_form, volume
from .structures import SU3Pair, nearly_kahler_residuals, weak_g2_residual

logger = logging.getLogger(__name__)

# Inner products (u_i, u_j) of the invariant 4-forms as printed
GRAM_Q = np.array(
    [
        [2, -2, -2, 1],
        [-2, 2, -2, 1],
        [-2, -2, 2, 1],
        [1, 1, 1, 0],
    ],
    dtype=int,
)

# The same pairing in x-coordinates, where x4 multiplies 2 u4
GRAM_Q_X = np.array(
    [
        [2.0, -2.0, -2.0, 2.0],
        [-2.0, 2.0, -2.0, 2.0],
        [-2.0, -2.0, 2.0, 2.0],
        [2.0, 2.0, 2.0, 0.0],
    ]
)

# Metric for which the y-system is the gradient flow of V in x-coordinates
_S = np.array([1.0, 1.0, 1.0, 0.0])
S7_FLOW_METRIC = GRAM_Q_X + (8.0 / 3.0) * np.outer(_S, _S)

S7_CSV_HEADER = ("t", "y1", "y2", "y3", "y4")
S3S3_CSV_HEADER = ("t", "x1", "x2", "x3", "y1", "y2", "y3", "H")


@dataclass(frozen=True)
class S7State:
    """Metric coordinates (y1, y2, y3, y4) of an invariant S^7 4-form."""

    y1: float
    y2: float
    y3: float
    y4: float

    def array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3, self.y4], dtype=float)

    @classmethod
    def of(cls, values: Sequence[float]) -> "S7State":
        y1, y2, y3, y4 = (float(v) for v in values)
        return cls(y1, y2, y3, y4)


@dataclass(frozen=True)
class S7XState:
    """Coefficients of rho = sum x_i d(alpha_i omega_i) + 2 x4 d(alpha_123)."""

    x1: float
    x2: float
    x3: float
    x4: float

    def array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4], dtype=float)

    @classmethod
    def of(cls, values: Sequence[float]) -> "S7XState":
        x1, x2, x3, x4 = (float(v) for v in values)
        return cls(x1, x2, x3, x4)


@dataclass(frozen=True)
class S3S3State:
    """x for the exact 3-form and y for the exact 4-form on S^3 x S^3."""

    x: Tuple[float, float, float]
    y: Tuple[float, float, float]

    def array(self) -> np.ndarray:
        return np.array([*self.x, *self.y], dtype=float)

    @classmethod
    def of(cls, values: Sequence[float]) -> "S3S3State":
        v = [float(c) for c in values]
        return cls(tuple(v[:3]), tuple(v[3:6]))


State = Union[S7State, S7XState, S3S3State, np.ndarray, Sequence[float]]


def _values(state: State) -> np.ndarray:
    if hasattr(state, "array"):
        return state.array()
    return np.asarray(state, dtype=float)


# S^7


def s7_rhs_y(state: State) -> np.ndarray:
    """
    dy/dt of the gradient flow:

        dy1/dt = -1 + (y2^2 + y3^2 - y1^2) / (2 y2 y3) + y1^2 / (2 y4^2)
        4 y4 dy4/dt = -(y1 + y2 + y3)

    and cyclically in (1, 2, 3).
    """
    y = _values(state)
    y1, y2, y3, y4 = y
    if y1 * y2 * y3 == 0.0 or y4 == 0.0:
        raise SingularStateError(f"S^7 flow is singular at y={y.tolist()}")
    q = y4 * y4
    sq = y[:3] ** 2
    others = np.array([y2 * y3, y3 * y1, y1 * y2])
    dy = -1.0 + (sq.sum() - 2.0 * sq) / (2.0 * others) + sq / (2.0 * q)
    dy4 = -(y1 + y2 + y3) / (4.0 * y4)
    return np.append(dy, dy4)


def s7_k(state: State) -> np.ndarray:
    """(k1, k2, k3) = (y2 y3 y4^2, y3 y1 y4^2, y1 y2 y4^2)."""
    y1, y2, y3, y4 = _values(state)
    q = y4 * y4
    return np.array([y2 * y3 * q, y3 * y1 * q, y1 * y2 * q])


def coord_map(state: State) -> S7State:
    """
    x -> y on the branch y4 > 0, y1 > 0.

    k_i = 2(x4 + x1 + x2 + x3 - 2 x_i) and y4^4 = -2(x1 + x2 + x3); then
    y1^2 = k2 k3 / (k1 y4^2), y2 = k3 / (y1 y4^2), y3 = k2 / (y1 y4^2).
    """
    x = _values(state)
    total = x[:3].sum()
    if total >= 0.0:
        logger.error("x1 + x2 + x3 = %r is not negative", total)
        raise SingularStateError(
            f"x1 + x2 + x3 must be negative, got {total!r}"
        )
    k = 2.0 * (x[3] + total - 2.0 * x[:3])
    scale = max(1.0, float(np.max(np.abs(x))))
    if np.min(np.abs(k)) <= 1e-14 * scale:
        raise SingularStateError(f"orbit boundary: k = {k.tolist()}")
    if k[0] * k[1] * k[2] < 0.0:
        raise SingularStateError(
            f"k1 k2 k3 < 0 has no real metric coordinates (k = {k.tolist()})"
        )
    y4 = (-2.0 * total) ** 0.25
    q = y4 * y4
    y1 = float(np.sqrt(k[1] * k[2] / (k[0] * q)))
    return S7State(y1, k[2] / (y1 * q), k[1] / (y1 * q), y4)


def coord_map_inverse(state: State) -> S7XState:
    """y -> x; (y1, y2, y3) and -(y1, y2, y3) give the same x."""
    y = _values(state)
    half_k = s7_k(y) / 2.0
    total = -(y[3] ** 4) / 2.0
    x4 = (half_k.sum() - total) / 3.0
    xs = (x4 + total - half_k) / 2.0
    return S7XState.of([*xs, x4])


def s7_volume(state: State) -> float:
    """V = y1 y2 y3 y4^4."""
    y1, y2, y3, y4 = _values(state)
    return float(y1 * y2 * y3 * y4**4)


def s7_grad_x(state: State) -> np.ndarray:
    """dV/dx through coord_map, by the chain rule."""
    y = coord_map(state).array()
    q = y[3] ** 2
    p = y[0] * y[1] * y[2]
    total = y[:3].sum()
    return np.append(q * (total - 2.0 * y[:3]) - p / 2.0, q * total)


def s7_rhs_x(state: State) -> np.ndarray:
    """dx/dt solving S7_FLOW_METRIC dx/dt = dV/dx."""
    return np.linalg.solve(S7_FLOW_METRIC, s7_grad_x(state))


def squashed_s7_values(lam: float) -> Tuple[float, float]:
    """
    (y, y4^2) at the constrained critical point y1 = y2 = y3 = y, where

        lam y = -1/2 + y^2 / (2 y4^2),  4 lam y4^2 = -3 y,

    so y = -3 / (10 lam) and y4^2 = 9 / (40 lam^2).
    """
    if lam == 0.0:
        logger.error("squashed_s7 needs a nonzero multiplier")
        raise ParameterError("lambda must be nonzero")
    return -3.0 / (10.0 * lam), 9.0 / (40.0 * lam * lam)


def squashed_s7(lam: float) -> S7State:
    """The squashed 7-sphere as an S7State; the flow there is lam * y."""
    y, y4sq = squashed_s7_values(lam)
    return S7State(y, y, y, float(np.sqrt(y4sq)))


def squashed_residuals(state: State, lam: float) -> Tuple[float, float]:
    """Residuals of the two defining equations of squashed_s7."""
    y, _, _, y4 = _values(state)
    q = y4 * y4
    return (
        abs(lam * y - (-0.5 + y * y / (2.0 * q))),
        abs(4.0 * lam * q + 3.0 * y),
    )


def s7_symmetric_closed_form(c: float, s: float) -> float:
    """y^2 = 2 s / 5 + c s^(-2/3), with s = y4^2, for y1 = y2 = y3 = y."""
    if s <= 0.0:
        raise SingularStateError(f"s must be positive, got {s!r}")
    ysq = 0.4 * s + c * s ** (-2.0 / 3.0)
    if ysq <= 0.0:
        logger.error("Closed form leaves its domain: c=%r s=%r", c, s)
        raise SingularStateError(f"y^2 = {ysq!r} is not positive")
    return ysq


def fitted_c(state: State) -> float:
    """The constant c of the closed-form family through a symmetric state."""
    y = _values(state)
    s = y[3] ** 2
    return float((y[0] ** 2 - 0.4 * s) * s ** (2.0 / 3.0))


def s7_frame_forms() -> Tuple[Form, Form, Form, Form]:
    """
    (omega1, omega2, omega3, nu) in the frame v1..v4 = e1..e4.

    omega1 = v4 v3 + v1 v2, omega2 = v1 v3 + v2 v4, omega3 = v2 v3 + v4 v1
    and nu = omega1 ^ omega1.
    """
    omega1 = Form.from_terms(7, 2, [((4, 3), 1.0), ((1, 2), 1.0)])
    omega2 = Form.from_terms(7, 2, [((1, 3), 1.0), ((2, 4), 1.0)])
    omega3 = Form.from_terms(7, 2, [((2, 3), 1.0), ((4, 1), 1.0)])
    return omega1, omega2, omega3, wedge(omega1, omega1)


def s7_reconstruct(state: State) -> Form:
    """
    The invariant 4-form at a point of the orbit, alpha_i = e_{4+i}:

        (x1 + x2 + x3) nu + k1 a2 a3 omega1 + k2 a3 a1 omega2 + k3 a1 a2 omega3
    """
    y = _values(state)
    k = s7_k(y)
    total = -(y[3] ** 4) / 2.0
    terms = s7_frame_forms()[3] * total
    for t_form, k_i in zip(_s7_t_forms(), k):
        terms = terms + t_form * k_i
    return terms


def _s7_alphas() -> Tuple[Form, Form, Form]:
    return tuple(Form.basis_form(7, 5 + i) for i in range(3))


def _s7_t_forms() -> Tuple[Form, Form, Form]:
    """T_i = alpha_j alpha_k omega_i for (i, j, k) cyclic."""
    alpha = _s7_alphas()
    return tuple(
        wedge(wedge(alpha[(i + 1) % 3], alpha[(i + 2) % 3]), omega)
        for i, omega in enumerate(s7_frame_forms()[:3])
    )


def s7_invariant_3forms() -> Tuple[Form, Form, Form, Form]:
    """(alpha_1 omega_1, alpha_2 omega_2, alpha_3 omega_3, alpha_123)."""
    alpha = _s7_alphas()
    products = [wedge(a, w) for a, w in zip(alpha, s7_frame_forms()[:3])]
    return (*products, Form.basis_form(7, 5, 6, 7))


def s7_derivative(gamma: Form) -> Form:
    """
    d of an invariant 3-form on S^7, using

        d alpha_i = -omega_i - 2 alpha_j alpha_k
        d omega_i = 2 (omega_j alpha_k - omega_k alpha_j)

    so that d(alpha_i omega_i) = -nu - 2 T_i + 2 T_j + 2 T_k and
    d(alpha_123) = -(T_1 + T_2 + T_3). With this sign of the curvature term
    the pairings int gamma_i ^ d gamma_j reproduce GRAM_Q.
    """
    if (gamma.dim, gamma.degree) != (7, 3):
        raise DimensionError("s7_derivative needs a 3-form on R^7")
    span = np.column_stack([b.coeffs for b in s7_invariant_3forms()])
    coef = np.linalg.lstsq(span, gamma.coeffs, rcond=None)[0]
    misfit = float(np.max(np.abs(span @ coef - gamma.coeffs)))
    if misfit > IDENTITY_RTOL * max(gamma.norm_inf(), 1.0):
        logger.error("3-form is off the invariant span by %r", misfit)
        raise ParameterError("3-form is not invariant on S^7")
    t1, t2, t3 = _s7_t_forms()
    nu = s7_frame_forms()[3]
    total_t = t1 + t2 + t3
    result = total_t * -coef[3]
    for i, t_form in enumerate((t1, t2, t3)):
        result = result + (total_t * 2.0 - t_form * 4.0 - nu) * coef[i]
    return result


def s7_dual_form(state: State) -> Form:
    """*rho for the metric of the reconstructed 4-form itself."""
    rho = s7_reconstruct(state)
    return hodge_star(rho, metric_from_form(rho).metric)


def squashed_weak_g2(lam: float) -> Tuple[float, float]:
    """
    (tau, residual) for d*rho = tau rho at squashed_s7(lam).

    rho depends on y only through products of two y_i, so lam and -lam give
    the same form and tau = -8 |lam|.
    """
    state = squashed_s7(lam)
    rho = s7_reconstruct(state)
    tau = -8.0 * abs(lam)
    d_star = s7_derivative(s7_dual_form(state))
    return tau, weak_g2_residual(d_star, rho, tau)


def cvetic_substitution(alpha: float, beta: float, gamma: float) -> S7State:
    """-alpha = y2 = y3, beta = -y1, gamma = y4."""
    return S7State(-beta, -alpha, -alpha, gamma)


# S^3 x S^3

# d f_j / d x_i for f0 = 1 + x1 + x2 + x3, f1 = x2 + x3 - x1 - 1, ...
_F_GRADIENT = np.array(
    [
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
    ]
)
_F_OFFSET = np.array([1.0, -1.0, -1.0, -1.0])


def _factors(x: np.ndarray) -> np.ndarray:
    return _F_GRADIENT @ x + _F_OFFSET


def v_rho_squared(state: State) -> float:
    """(1+x1+x2+x3)(x2+x3-x1-1)(x3+x1-x2-1)(x1+x2-x3-1)."""
    return float(np.prod(_factors(_values(state)[:3])))


def v_sigma_squared(state: State) -> float:
    """y1 y2 y3."""
    return float(np.prod(_values(state)[3:6]))


def s3s3_hamiltonian(state: State) -> float:
    """H = 4 y1 y2 y3 - V(rho)^2."""
    return 4.0 * v_sigma_squared(state) - v_rho_squared(state)


def s3s3_rhs(state: State) -> np.ndarray:
    """dx_i/dt = dH/dy_i, dy_i/dt = -dH/dx_i."""
    v = _values(state)
    x, y = v[:3], v[3:6]
    f = _factors(x)
    # product of the other three factors, for each factor
    rest = np.array([np.prod(np.delete(f, j)) for j in range(4)])
    dpi_dx = _F_GRADIENT.T @ rest
    dx = 4.0 * np.array([y[1] * y[2], y[2] * y[0], y[0] * y[1]])
    return np.concatenate([dx, dpi_dx])


def s3s3_forms(state: State) -> Tuple[Form, Form]:
    """
    rho and sigma in the basis (s1, s2, s3, S1, S2, S3) = (e1, ..., e6):

        rho = s123 - S123 + x1 (s1 S2 S3 - s2 s3 S1) + cyclic
        sigma = y1 s2 S2 s3 S3 + y2 s3 S3 s1 S1 + y3 s1 S1 s2 S2
    """
    v = _values(state)
    x, y = v[:3], v[3:6]
    rho_terms = [((1, 2, 3), 1.0), ((4, 5, 6), -1.0)]
    sigma_terms = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        s_i, s_j, s_k = i + 1, j + 1, k + 1
        big_i, big_j, big_k = i + 4, j + 4, k + 4
        rho_terms.append(((s_i, big_j, big_k), x[i]))
        rho_terms.append(((s_j, s_k, big_i), -x[i]))
        sigma_terms.append(((s_j, big_j, s_k, big_k), y[i]))
    return Form.from_terms(6, 3, rho_terms), Form.from_terms(6, 4, sigma_terms)


def s3s3_omega(state: State) -> Form:
    """omega = sum c_i s_i S_i with omega^2 / 2 = sigma.

    c1 = sqrt(y2 y3 / y1) and cyclically.
    """
    y = _values(state)[3:6]
    if np.prod(y) <= 0.0:
        raise SingularStateError(f"y1 y2 y3 must be positive, got {y.tolist()}")
    terms = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        terms.append(((i + 1, i + 4), float(np.sqrt(y[j] * y[k] / y[i]))))
    return Form.from_terms(6, 2, terms)


def reconstruct_s3s3(state: State) -> Tuple[Form, Form]:
    """The pointwise forms (rho, sigma) of a reduced state."""
    return s3s3_forms(state)


def s3s3_hamiltonian_functional(state: State) -> float:
    """phi(rho) - 2 phi(sigma) from the general volume functionals."""
    rho, sigma = s3s3_forms(state)
    return volume(rho).phi - 2.0 * volume(sigma).phi


def bryant_salamon_y(x: float) -> float:
    """y on the symmetric H = 0 locus: 4 y^3 = (1 + 3x)(x - 1)^3."""
    return float(np.cbrt((1.0 + 3.0 * x) * (x - 1.0) ** 3 / 4.0))


def bryant_salamon_state(x: float) -> S3S3State:
    y = bryant_salamon_y(x)
    return S3S3State((x, x, x), (y, y, y))


def brandhuber_coords(
    a: Sequence[float], b: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (x, y) from the metric functions (A_i, B_i):

        x1 = A1 A2 A3 + A1 A2 B3 + A3 B1 B2 - A1 B2 B3,  y1 = 4 A2 B2 A3 B3

    and cyclically.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.zeros(3)
    y = np.zeros(3)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        x[i] = (
            a[i] * a[j] * a[k]
            + a[i] * a[j] * b[k]
            + a[k] * b[i] * b[j]
            - a[i] * b[j] * b[k]
        )
        y[i] = 4.0 * a[j] * b[j] * a[k] * b[k]
    return x, y


@dataclass(frozen=True)
class WeakSU3Point:
    """Critical point of 8 y^(3/2) + 3 sqrt(3) x^2 on x y = c, multiplier mu."""

    x: float
    y: float
    mu: float


def weak_su3_critical(c: float) -> WeakSU3Point:
    """
    Solve the Lagrange system on x1 = x2 = x3 = x, y1 = y2 = y3 = y.

    Eliminating mu gives sqrt(3) x^2 = 2 y^(3/2); with x = c / y this is the
    one-variable equation sqrt(3) c^2 = 2 y^(7/2).
    """
    if not c > 0.0:
        logger.error("weak_su3_critical needs c > 0, got %r", c)
        raise ParameterError(f"c must be positive, got {c!r}")
    target = np.sqrt(3.0) * c * c

    def residual(y: float) -> float:
        return target - 2.0 * y**3.5

    hi = 1.0
    while residual(hi) > 0.0:
        hi *= 2.0
    y = brentq(residual, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    x = c / y
    return WeakSU3Point(x, y, 6.0 * np.sqrt(3.0) * x / y)


def lagrange_residual(point: WeakSU3Point, c: float) -> float:
    """Largest component of grad F - mu grad(x y) and of x y - c."""
    x, y, mu = point.x, point.y, point.mu
    grad_f = np.array([6.0 * np.sqrt(3.0) * x, 12.0 * np.sqrt(y)])
    grad_g = np.array([y, x])
    return float(max(np.max(np.abs(grad_f - mu * grad_g)), abs(x * y - c)))


@lru_cache(maxsize=None)
def s3s3_coframe_derivatives() -> Tuple[Form, ...]:
    """d s_i = -s_j ^ s_k and d S_i = -S_j ^ S_k, cyclically."""
    derivatives = []
    for offset in (1, 4):
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            pair = (offset + j, offset + k)
            derivatives.append(Form.from_terms(6, 2, [(pair, -1.0)]))
    return tuple(derivatives)


def s3s3_derivative(a: Form) -> Form:
    """Exterior derivative of a left-invariant form on S^3 x S^3."""
    return invariant_derivative(a, s3s3_coframe_derivatives())


def weak_su3_pair(point: WeakSU3Point) -> SU3Pair:
    """
    The invariant pair of a symmetric point:

        omega = sqrt(y) (s1 S1 + s2 S2 + s3 S3),  rho = x d(s1 S1 + ...)

    so that rho matches s3s3_forms at x1 = x2 = x3 = x without s123 - S123.
    """
    if not point.y > 0.0:
        raise ParameterError(f"y must be positive, got {point.y!r}")
    diagonal = Form.from_terms(6, 2, [((i + 1, i + 4), 1.0) for i in range(3)])
    return SU3Pair(
        s3s3_derivative(diagonal) * point.x, diagonal * np.sqrt(point.y)
    )


def weak_su3_lambda(point: WeakSU3Point) -> float:
    """lam with d omega = 3 lam rho, i.e. sqrt(y) / (3 x)."""
    return float(np.sqrt(point.y) / (3.0 * point.x))


def weak_su3_residuals(point: WeakSU3Point) -> Tuple[float, float]:
    """
    Nearly Kahler residuals of weak_su3_pair(point).

    d omega = 3 lam rho holds for any point; d rho-hat = -2 lam omega^2
    holds exactly when sqrt(3) x^2 = 2 y^(3/2).
    """
    pair = weak_su3_pair(point)
    return nearly_kahler_residuals(
        s3s3_derivative(pair.rho_hat),
        s3s3_derivative(pair.omega),
        pair,
        weak_su3_lambda(point),
    )


# Output


def _format(value: float) -> str:
    return f"{value:.{CSV_DIGITS}g}"


def trajectory_rows(traj: Trajectory, with_hamiltonian: bool = False):
    """Rows of formatted fields, one per accepted sample."""
    for t, state in zip(traj.times, traj.states):
        fields = [t, *state]
        if with_hamiltonian:
            fields.append(s3s3_hamiltonian(state))
        yield [_format(v) for v in fields]


def write_csv(
    traj: Trajectory,
    out: TextIO,
    header: Sequence[str],
    with_hamiltonian: bool = False,
) -> None:
    """Write a trajectory; an incomplete run ends with a '# INCOMPLETE' line."""
    out.write(",".join(header) + "\n")
    for row in trajectory_rows(traj, with_hamiltonian):
        out.write(",".join(row) + "\n")
    if not traj.complete:
        out.write(f"# INCOMPLETE: {traj.reason}\n")
