"""
Volume functionals of stable forms, their dual forms and induced metrics.

Every case builds a density-valued object from rho, takes the root of a
determinant (or of -tr K^2) and multiplies by a fixed calibration constant.
The constants are fixed once per case by evaluating the functional on a
reference normal form, so that:

  * the Liouville volume omega^m / m! is used for 2-forms,
  * (6, 3): the SU(3) normal pair satisfies phi(rho) = 2 phi(sigma),
  * (7, 3), (7, 4), (8, 3), (8, 5): the dual form is +*rho (n = 7) or
    -*rho (n = 8) for the induced metric, which is the identity on the
    reference forms.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Callable, Optional, Tuple

import numpy as np

from . import exterior
from .config import FD_BASE_STEP, STABILITY_FLOOR
from .errors import DegreeError, NotStableError
from .exterior import (
    DensityMap,
    Form,
    Variance,
    contractions,
    dual_multivector,
    hodge_star,
    pairing_matrix,
    pullback,
    top_pair,
    wedge_power,
    wedge_table,
)

logger = logging.getLogger(__name__)


class StabilityClass(str, enum.Enum):
    """GL(V)-orbit type of a form."""

    SYMPLECTIC = "Symplectic"
    SL3C = "SL3C"
    G2 = "G2"
    PSU3 = "PSU3"
    NOT_STABLE = "NotStable"
    OTHER_REAL_FORM = "StableOtherRealForm"

    @property
    def is_stable(self) -> bool:
        return self is not StabilityClass.NOT_STABLE


# Stable classes with the compact stabilizer (or the real form the
# dual-form and metric constructions are written for)
_PRIMARY = {
    StabilityClass.SYMPLECTIC,
    StabilityClass.SL3C,
    StabilityClass.G2,
    StabilityClass.PSU3,
}


@dataclass(frozen=True)
class VolumeResult:
    """Coefficient of phi(rho) on e_1...n and the orbit type of rho."""

    phi: float
    stability_class: StabilityClass

    def __repr__(self) -> str:
        return (
            f"VolumeResult(phi={self.phi:.6g}, "
            f"class={self.stability_class.value})"
        )


@dataclass(frozen=True, eq=False)
class AlmostComplexStructure:
    """A 6x6 real matrix I with I^2 = -Id; column j is I(e_j)."""

    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class MetricResult:
    """Induced metric and its Riemannian volume sqrt(det g)."""

    metric: np.ndarray
    vol: float


def _case(n: int, p: int) -> str:
    if p == 2 and n % 2 == 0:
        return "symplectic"
    if n % 2 == 0 and p == n - 2 and n >= 6:
        return "bivector"
    if (n, p) == (6, 3):
        return "sl3c"
    if n == 7 and p in (3, 4):
        return "g2"
    if n == 8 and p in (3, 5):
        return "psu3"
    logger.error("Unsupported volume case n=%d p=%d", n, p)
    raise DegreeError(f"no volume functional for degree {p} in dimension {n}")


def supported(n: int, p: int) -> bool:
    try:
        _case(n, p)
    except DegreeError:
        return False
    return True


def _stable_floor(rho: Form) -> float:
    scale = max(rho.norm_inf(), 1e-300)
    return STABILITY_FLOOR * scale ** (rho.dim / rho.degree)


# Density-valued constructions


def liouville(omega: Form) -> float:
    """Signed coefficient of omega^m / m! on e_1...2m."""
    m = omega.dim // 2
    return wedge_power(omega, m).top_coefficient() / factorial(m)


def bivector_power(rho: Form) -> Tuple[float, int]:
    """
    sigma^m for the bivector sigma dual to rho in degree 2m - 2.

    Returns the density value and its weight m - 1.
    """
    m = rho.dim // 2
    sigma = dual_multivector(rho)
    return sigma.power(m).density()


def k_map(rho: Form) -> DensityMap:
    """K(v) = iota(v) rho ^ rho, read as a vector-valued density."""
    if (rho.dim, rho.degree) != (6, 3):
        raise DegreeError("k_map needs a 3-form on R^6")
    iota = contractions(rho)
    fives = np.einsum("va,b,abc->vc", iota, rho.coeffs, wedge_table(6, 2, 3))
    # column j holds the vector w with iota(w) vol = iota(e_j) rho ^ rho
    matrix = pairing_matrix(6, 1) @ fives.T
    return DensityMap(matrix, 1, Variance.ENDOMORPHISM)


def _triple_top(coeffs: np.ndarray, n: int) -> np.ndarray:
    """B[v, w] = top coefficient of iota_v c ^ iota_w c ^ c for n = 7."""
    c = Form(n, 3, coeffs)
    iota = contractions(c)
    fours = np.einsum("ia,jb,abc->ijc", iota, iota, wedge_table(n, 2, 2))
    return np.einsum("ijc,cd,d->ij", fours, pairing_matrix(n, 4), coeffs)


def _triple_contracted(coeffs: np.ndarray, n: int) -> np.ndarray:
    """
    G[v, w] = sum_kl d(v, e_k)_l d(w, e_l)_k for n = 8.

    d(v, w) is the vector u with iota(u) vol = iota_v c ^ iota_w c ^ c.
    """
    c = Form(n, 3, coeffs)
    iota = contractions(c)
    fours = np.einsum("ia,jb,abc->ijc", iota, iota, wedge_table(n, 2, 2))
    sevens = np.einsum("ijc,d,cdk->ijk", fours, coeffs, wedge_table(n, 4, 3))
    d = np.einsum("ijk,lk->ijl", sevens, pairing_matrix(n, 1))
    return np.einsum("vkl,wlk->vw", d, d)


def metric_map(rho: Form) -> DensityMap:
    """
    The symmetric density-valued bilinear map of a 7d or 8d form.

    Degree-3 forms give a map V -> V*; for degree n - 3 the form is first
    turned into a trivector and the same construction gives V* -> V.
    """
    n, p = rho.dim, rho.degree
    if _case(n, p) not in ("g2", "psu3"):
        raise DegreeError(
            f"no metric construction for degree {p} in dimension {n}"
        )
    cubic = _triple_top if n == 7 else _triple_contracted
    if p == 3:
        weight = 1 if n == 7 else 2
        return DensityMap(cubic(rho.coeffs, n), weight, Variance.TO_DUAL)
    trivector = dual_multivector(rho)
    # weight of the trivector cubed, less one for the Lambda^(n-1) V leg
    weight = 2 if n == 7 else 4
    matrix = cubic(trivector.base.coeffs, n)
    return DensityMap(matrix, weight, Variance.FROM_DUAL)


def _definite_sign(symmetric: np.ndarray) -> int:
    """+1 or -1 for a definite matrix, 0 when indefinite or singular."""
    eig = np.linalg.eigvalsh((symmetric + symmetric.T) / 2.0)
    scale = np.max(np.abs(eig))
    if scale == 0.0 or np.min(np.abs(eig)) <= 1e-12 * scale:
        return 0
    if np.all(eig > 0):
        return 1
    if np.all(eig < 0):
        return -1
    return 0


def _normalized_metric(dmap: DensityMap) -> Optional[np.ndarray]:
    """Weight-zero positive definite metric from a map, None if indefinite."""
    sign = _definite_sign(dmap.matrix)
    if sign == 0:
        return None
    exponent = -dmap.weight / dmap.det_weight
    scaled = sign * dmap.matrix * abs(dmap.det()) ** exponent
    if dmap.variance is Variance.FROM_DUAL:
        scaled = np.linalg.inv(scaled)
    return (scaled + scaled.T) / 2.0


# Calibration against reference forms


def _reference(n: int, p: int) -> Tuple[Form, float]:
    """Reference normal form for a case and its prescribed phi."""
    from . import structures

    case = _case(n, p)
    if case == "bivector":
        omega = structures.standard_symplectic(n)
        m = n // 2
        return wedge_power(omega, m - 1) / factorial(m - 1), 1.0
    if case == "sl3c":
        return structures.su3_normal_pair().rho, 2.0
    if case == "g2":
        phi, star_phi = structures.g2_normal_forms()
        ref = phi if p == 3 else star_phi
        return ref, float(p)
    rho3 = structures.su3_structure_3form()
    ref = rho3 if p == 3 else -hodge_star(rho3)
    return ref, p / n * float(ref.coeffs @ ref.coeffs)


def _raw_volume(rho: Form) -> Tuple[float, StabilityClass]:
    """Uncalibrated density and orbit type."""
    n, p = rho.dim, rho.degree
    case = _case(n, p)
    floor = _stable_floor(rho)
    if case == "symplectic":
        value = abs(liouville(rho))
        if value > floor:
            return value, StabilityClass.SYMPLECTIC
        return value, StabilityClass.NOT_STABLE
    if case == "bivector":
        value, weight = bivector_power(rho)
        raw = abs(value) ** (1.0 / weight)
        if raw > floor:
            return raw, StabilityClass.SYMPLECTIC
        return raw, StabilityClass.NOT_STABLE
    if case == "sl3c":
        trk2 = k_map(rho).trace_of_square()
        raw = float(np.sqrt(abs(trk2)))
        if raw <= floor:
            return 0.0, StabilityClass.NOT_STABLE
        if trk2 < 0:
            return raw, StabilityClass.SL3C
        return raw, StabilityClass.OTHER_REAL_FORM
    dmap = metric_map(rho)
    raw = dmap.root_volume()
    if raw <= floor:
        return 0.0, StabilityClass.NOT_STABLE
    if _definite_sign(dmap.matrix) == 0:
        return raw, StabilityClass.OTHER_REAL_FORM
    return raw, StabilityClass.G2 if n == 7 else StabilityClass.PSU3


@lru_cache(maxsize=None)
def calibration(n: int, p: int) -> float:
    """Constant multiplying the raw density for the (n, p) case."""
    if _case(n, p) == "symplectic":
        return 1.0
    ref, target = _reference(n, p)
    raw, _ = _raw_volume(ref)
    logger.debug("Calibration n=%d p=%d raw=%r target=%r", n, p, raw, target)
    return target / raw


@lru_cache(maxsize=None)
def metric_calibration(n: int, p: int) -> float:
    """Scale making the induced metric of the reference form the identity."""
    ref, _ = _reference(n, p)
    g = _normalized_metric(metric_map(ref))
    return n / float(np.trace(g))


def volume(rho: Form) -> VolumeResult:
    """phi(rho) as a positive coefficient on e_1...n, with the orbit type."""
    raw, cls = _raw_volume(rho)
    if not cls.is_stable:
        return VolumeResult(0.0, cls)
    return VolumeResult(calibration(rho.dim, rho.degree) * raw, cls)


def reference_form(n: int, p: int) -> Form:
    """The normal form a case is calibrated on."""
    if _case(n, p) == "symplectic":
        from .structures import standard_symplectic

        return standard_symplectic(n)
    return _reference(n, p)[0]


def random_stable_form(
    n: int, p: int, rng: np.random.Generator, spread: float = 0.3
) -> Form:
    """A^* of the reference form for a random A near Id with det A > 0."""
    ref = reference_form(n, p)
    while True:
        a = np.eye(n) + spread * rng.standard_normal((n, n))
        if np.linalg.det(a) > 0.1:
            return pullback(ref, a)


def require_stable(rho: Form) -> VolumeResult:
    """volume(rho), raising NotStableError outside the primary open orbit."""
    result = volume(rho)
    if result.stability_class not in _PRIMARY:
        logger.error(
            "Form of degree %d in dimension %d is %s",
            rho.degree,
            rho.dim,
            result.stability_class.value,
        )
        raise NotStableError(
            f"form is {result.stability_class.value}",
            result.stability_class.value,
        )
    return result


# Dual forms


def _euler_oriented(candidate: Form, rho: Form) -> Form:
    """Flip the sign of candidate so that candidate ^ rho is positive."""
    return -candidate if top_pair(candidate, rho) < 0 else candidate


def dual_form_numeric(rho: Form, step: Optional[float] = None) -> Form:
    """
    rho-hat from central differences of phi.

    Solves top_pair(rho_hat, e_I) = d phi / d rho_I through the pairing
    matrix, which is a signed permutation.
    """
    require_stable(rho)
    n, p = rho.dim, rho.degree
    h = step if step is not None else FD_BASE_STEP * (1.0 + rho.norm_inf())
    grad = np.zeros_like(rho.coeffs)
    for i in range(rho.coeffs.shape[0]):
        bump = np.zeros_like(rho.coeffs)
        bump[i] = h
        plus = volume(Form(n, p, rho.coeffs + bump))
        minus = volume(Form(n, p, rho.coeffs - bump))
        grad[i] = (plus.phi - minus.phi) / (2.0 * h)
    # rho_hat comes first in the pairing, e_I second
    sign = -1.0 if (p * (n - p)) % 2 else 1.0
    return exterior.complement_from_pairing(n, p, sign * grad)


def bivector_matrix(rho: Form) -> np.ndarray:
    """Antisymmetric matrix of the bivector dual to rho."""
    return exterior.two_form_matrix(dual_multivector(rho).base)


def symplectic_from_dual(rho: Form) -> Form:
    """
    The 2-form omega with rho = +-omega^(m-1) / (m-1)! in degree 2m - 2.

    omega = -|Pf S|^(1/(m-1)) S^-1 for the bivector matrix S of rho.
    """
    m = rho.dim // 2
    s = bivector_matrix(rho)
    pf = float(np.sqrt(abs(np.linalg.det(s))))
    omega = -(pf ** (1.0 / (m - 1))) * np.linalg.inv(s)
    rows, cols = np.triu_indices(rho.dim, k=1)
    return Form(rho.dim, 2, omega[rows, cols])


def dual_form_closed(rho: Form) -> Form:
    """rho-hat from the closed formula of its case."""
    result = require_stable(rho)
    n, p = rho.dim, rho.degree
    case = _case(n, p)
    if case == "symplectic":
        m = n // 2
        candidate = wedge_power(rho, m - 1) / factorial(m - 1)
    elif case == "bivector":
        m = n // 2
        candidate = symplectic_from_dual(rho) / (m - 1)
    elif case == "sl3c":
        candidate = pullback(rho, acs_from_rho(rho).matrix)
    elif case == "g2":
        candidate = hodge_star(rho, metric_from_form(rho).metric)
    else:
        candidate = -hodge_star(rho, metric_from_form(rho).metric)
    logger.debug("Closed dual for %s case, phi=%r", case, result.phi)
    return _euler_oriented(candidate, rho)


# Metrics and complex structures


def metric_from_form(rho: Form) -> MetricResult:
    """
    The metric induced by a 7d or 8d stable form.

    Normalized to weight zero so that g(A* rho) = A^T g(rho) A, and scaled so
    the reference normal forms give the identity.
    """
    dmap = metric_map(rho)
    g = _normalized_metric(dmap)
    if g is None or dmap.root_volume() <= _stable_floor(rho):
        cls = _raw_volume(rho)[1]
        logger.error("No positive definite metric: form is %s", cls.value)
        raise NotStableError(
            f"induced bilinear form is not definite ({cls.value})", cls.value
        )
    g = metric_calibration(rho.dim, rho.degree) * g
    return MetricResult(g, float(np.sqrt(np.linalg.det(g))))


def acs_from_rho(rho: Form) -> AlmostComplexStructure:
    """
    I = K / sqrt(-tr K^2 / 6) for an SL(3, C)-stable 3-form on R^6.

    The sign of I is the one for which rho + i rho-hat is of type (3, 0),
    i.e. I* rho = rho-hat with rho-hat ^ rho > 0.
    """
    kmap = k_map(rho)
    trk2 = kmap.trace_of_square()
    if trk2 >= -(_stable_floor(rho) ** 2):
        logger.error("tr K^2 = %r is not negative", trk2)
        raise NotStableError(
            "3-form does not define an almost complex structure (tr K^2 >= 0)",
            StabilityClass.OTHER_REAL_FORM.value
            if trk2 > 0
            else StabilityClass.NOT_STABLE.value,
        )
    matrix = kmap.matrix / np.sqrt(-trk2 / 6.0)
    if top_pair(pullback(rho, matrix), rho) < 0:
        matrix = -matrix
    return AlmostComplexStructure(matrix)


def complex_form(rho: Form) -> Tuple[Form, Form]:
    """Real and imaginary parts of Omega = rho + i rho-hat."""
    return rho, dual_form_closed(rho)


def type_30_residual(rho: Form) -> float:
    """
    Largest coefficient of iota(v) Omega over anti-holomorphic v.

    Anti-holomorphic vectors are v = X + i I X; for a (3, 0)-form these
    contractions vanish.
    """
    acs = acs_from_rho(rho)
    re, im = complex_form(rho)
    worst = 0.0
    for j in range(6):
        x = np.eye(6)[j]
        y = acs.matrix @ x
        # iota(x + i y)(re + i im)
        #   = (iota_x re - iota_y im) + i (iota_x im + iota_y re)
        real_part = exterior.contract(x, re) - exterior.contract(y, im)
        imag_part = exterior.contract(x, im) + exterior.contract(y, re)
        worst = max(worst, real_part.norm_inf(), imag_part.norm_inf())
    return worst


def euler_residual(
    rho: Form, dual: Callable[[Form], Form] = dual_form_closed
) -> float:
    """|top_pair(rho_hat, rho) - (n/p) phi| / ((n/p) phi)."""
    phi = volume(rho).phi
    expected = rho.dim / rho.degree * phi
    return abs(top_pair(dual(rho), rho) - expected) / expected
