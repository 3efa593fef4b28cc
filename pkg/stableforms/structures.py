"""
Normal forms and structure-level identities.

SU(3) pairs (rho, sigma = omega^2 / 2) on R^6, their compatibility and
positive type, assembly of G2 forms on R^7 and of the cone over an SU(3)
structure, the Spin(7) 4-form on R^8, and the orthogonal multiplication and
structure 3-form of su(3).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .config import FORMS_DIR, IDENTITY_RTOL, SU3_TOLERANCE
from .errors import (
    CompatibilityError,
    DimensionError,
    NotStableError,
    ParameterError,
)
from .exterior import (
    Form,
    hodge_star,
    load_form,
    pullback,
    two_form_matrix,
    wedge,
    wedge_power,
)
from .stability import (
    acs_from_rho,
    dual_form_closed,
    metric_from_form,
    require_stable,
    volume,
)

logger = logging.getLogger(__name__)

# Compatibility constant phi(rho) / phi(sigma) used throughout
COMPAT_CONSTANT = 2.0

# Cube root of -1 appearing in the su(3) multiplication
_OMEGA = (1.0 + 1j * np.sqrt(3.0)) / 2.0


@lru_cache(maxsize=None)
def packaged_form(name: str) -> Form:
    """A normal form shipped under stableforms/forms, by file stem."""
    return load_form(os.path.join(FORMS_DIR, f"{name}.json"))


def g2_normal_forms() -> Tuple[Form, Form]:
    """The G2 3-form phi = e7 ^ omega + rho and *phi on R^7 (g = Id)."""
    return packaged_form("normal-g2"), packaged_form("normal-g2-star")


def standard_symplectic(n: int) -> Form:
    """e12 + e34 + ... on R^n."""
    if n % 2:
        raise DimensionError(f"symplectic forms need even dimension, got {n}")
    terms = [((2 * k + 1, 2 * k + 2), 1.0) for k in range(n // 2)]
    return Form.from_terms(n, 2, terms)


def e7_direction() -> Form:
    return Form.basis_form(7, 7)


@dataclass(frozen=True, eq=False)
class SU3Pair:
    """
    A stable 3-form rho and a stable 2-form omega on R^6.

    sigma = omega^2 / 2 is derived; omega is only fixed by sigma up to sign,
    and from_forms picks the sign that makes the pair of positive type.
    """

    rho: Form
    omega: Form

    def __post_init__(self) -> None:
        if (self.rho.dim, self.rho.degree) != (6, 3):
            raise DimensionError("rho must be a 3-form on R^6")
        if (self.omega.dim, self.omega.degree) != (6, 2):
            raise DimensionError("omega must be a 2-form on R^6")

    @property
    def sigma(self) -> Form:
        return wedge_power(self.omega, 2) / 2.0

    @property
    def rho_hat(self) -> Form:
        return dual_form_closed(self.rho)

    @classmethod
    def from_forms(cls, rho: Form, sigma: Form) -> "SU3Pair":
        """Recover omega = +-2 sigma-hat from a stable 4-form."""
        omega = 2.0 * dual_form_closed(sigma)
        pair = cls(rho, omega)
        if not positive_type(pair) and positive_type(cls(rho, -omega)):
            pair = cls(rho, -omega)
        return pair

    def scaled(self, rho_scale: float, omega_scale: float) -> "SU3Pair":
        return SU3Pair(self.rho * rho_scale, self.omega * omega_scale)

    def __repr__(self) -> str:
        return f"SU3Pair(rho={self.rho!r}, omega={self.omega!r})"


def su3_normal_pair() -> SU3Pair:
    """The 6d pair obtained from the G2 normal form by removing e7."""
    return SU3Pair(
        packaged_form("normal-su3-rho"), packaged_form("normal-su3-omega")
    )


def su3_normal_rho_hat() -> Form:
    return packaged_form("normal-su3-rho-hat")


def random_compatible_pair(
    rng: np.random.Generator, spread: float = 0.3
) -> SU3Pair:
    """A^* of the normal pair for a random A near Id with det A > 0."""
    pair = su3_normal_pair()
    while True:
        a = np.eye(6) + spread * rng.standard_normal((6, 6))
        if np.linalg.det(a) > 0.1:
            return SU3Pair(pullback(pair.rho, a), pullback(pair.omega, a))


@dataclass(frozen=True)
class CompatReport:
    """Result of check_compat."""

    primitive: bool
    c: Optional[float]
    positive_type: bool


def positive_type(pair: SU3Pair) -> bool:
    """True when X -> omega(X, IX) is positive definite."""
    try:
        acs = acs_from_rho(pair.rho)
    except NotStableError:
        return False
    h = two_form_matrix(pair.omega) @ acs.matrix
    return bool(np.min(np.linalg.eigvalsh((h + h.T) / 2.0)) > 0.0)


def _primitive(pair: SU3Pair) -> bool:
    scale = max(pair.omega.norm_inf() * pair.rho.norm_inf(), 1.0)
    return wedge(pair.omega, pair.rho).is_zero(atol=IDENTITY_RTOL * scale)


def check_compat(pair: SU3Pair) -> CompatReport:
    """Primitivity, c = phi(rho) / phi(sigma) and positive type."""
    require_stable(pair.rho)
    require_stable(pair.sigma)
    c = volume(pair.rho).phi / volume(pair.sigma).phi
    return CompatReport(_primitive(pair), c, positive_type(pair))


def is_compatible(pair: SU3Pair, rtol: float = 1e-8) -> bool:
    report = check_compat(pair)
    return (
        report.primitive
        and report.positive_type
        and abs(report.c - COMPAT_CONSTANT) <= rtol * COMPAT_CONSTANT
    )


def assemble_7d(pair: SU3Pair, dt_scale: float = 1.0) -> Form:
    """phi = dt ^ omega + rho on R^7, with dt = dt_scale * e7."""
    if not is_compatible(pair):
        report = check_compat(pair)
        logger.error("Pair is not compatible: %s", report)
        raise CompatibilityError(
            f"pair is not compatible (primitive={report.primitive}, "
            f"c={report.c:.6g}, positive_type={report.positive_type})"
        )
    dt = e7_direction() * dt_scale
    return wedge(dt, pair.omega.embed(7)) + pair.rho.embed(7)


def expected_star_7d(pair: SU3Pair, dt_scale: float = 1.0) -> Form:
    """dt ^ rho-hat - sigma, the Hodge dual of assemble_7d(pair, dt_scale)."""
    dt = e7_direction() * dt_scale
    return wedge(dt, pair.rho_hat.embed(7)) - pair.sigma.embed(7)


def star_7d(phi: Form) -> Form:
    """Hodge star of a G2 form for its own metric."""
    return hodge_star(phi, metric_from_form(phi).metric)


def decompose_7d(phi: Form) -> SU3Pair:
    """Split a 7d 3-form as e7 ^ omega + rho, with omega and rho on R^6."""
    if (phi.dim, phi.degree) != (7, 3):
        raise DimensionError("decompose_7d needs a 3-form on R^7")
    omega_terms = []
    rho_terms = []
    for idx, value in phi.terms():
        if idx[-1] == 7:
            # e_a ^ e_b ^ e7 = e7 ^ e_a ^ e_b
            omega_terms.append((idx[:-1], value))
        else:
            rho_terms.append((idx, value))
    return SU3Pair(
        Form.from_terms(6, 3, rho_terms), Form.from_terms(6, 2, omega_terms)
    )


def cone_form(pair: SU3Pair, r: float, lam: float) -> Form:
    """(r^2 / lam) dr ^ omega + r^3 rho on R^6 x R, dr = e7."""
    dr = e7_direction()
    radial = wedge(dr, pair.omega.embed(7)) * (r**2 / lam)
    return radial + pair.rho.embed(7) * r**3


def cone_star(pair: SU3Pair, r: float, lam: float) -> Form:
    """(r^3 / lam) dr ^ rho-hat - (r^4 / 2) omega^2."""
    dr = e7_direction()
    return (
        wedge(dr, pair.rho_hat.embed(7)) * (r**3 / lam)
        - wedge_power(pair.omega, 2).embed(7) * (r**4 / 2.0)
    )


def spin7_form(phi: Form) -> Form:
    """The self-dual 4-form phi ^ dt + *phi on R^7 x R, dt = e8."""
    if (phi.dim, phi.degree) != (7, 3):
        raise DimensionError("spin7_form needs a 3-form on R^7")
    return wedge(phi.embed(8), Form.basis_form(8, 8)) + star_7d(phi).embed(8)


def weak_g2_residual(d_star_rho: Form, rho: Form, lam: float) -> float:
    """Largest coefficient of d*rho - lam rho (nearly parallel G2).

    See flows.squashed_weak_g2 for the invariant derivative on S^7.
    """
    return (d_star_rho - rho * lam).norm_inf()


def nearly_kahler_residuals(
    d_rho_hat: Form, d_omega: Form, pair: SU3Pair, lam: float
) -> Tuple[float, float]:
    """
    Residuals of d rho-hat = -2 lam omega^2 and d omega = 3 lam rho.

    The exterior derivatives come from an invariant frame, see
    flows.weak_su3_residuals.
    """
    first = d_rho_hat + wedge_power(pair.omega, 2) * (2.0 * lam)
    second = d_omega - pair.rho * (3.0 * lam)
    return first.norm_inf(), second.norm_inf()


# su(3)


def check_su3(a: np.ndarray, tol: float = SU3_TOLERANCE) -> np.ndarray:
    """Return a as a complex 3x3 array, raising if it is not in su(3)."""
    m = np.asarray(a, dtype=complex)
    if m.shape != (3, 3):
        raise DimensionError(f"su(3) elements are 3x3, got {m.shape}")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if np.max(np.abs(m + m.conj().T)) > tol * scale:
        raise ParameterError("matrix is not skew-hermitian")
    if abs(np.trace(m)) > tol * scale:
        raise ParameterError("matrix is not traceless")
    return m


def su3_inner(a: np.ndarray, b: np.ndarray) -> float:
    """<A, B> = -tr(AB)."""
    return float(-np.trace(a @ b).real)


def su3_norm(a: np.ndarray) -> float:
    return float(np.sqrt(su3_inner(a, a)))


def su3_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A x B = w AB - conj(w) BA - (i / sqrt 3) tr(AB) I.

    w = (1 + i sqrt 3) / 2.
    """
    a = check_su3(a)
    b = check_su3(b)
    return (
        _OMEGA * (a @ b)
        - np.conj(_OMEGA) * (b @ a)
        - (1j / np.sqrt(3.0)) * np.trace(a @ b) * np.eye(3)
    )


@lru_cache(maxsize=None)
def _gell_mann() -> Tuple[np.ndarray, ...]:
    s = 1.0 / np.sqrt(3.0)
    mats = [
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 0]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]],
        [[0, 0, 0], [0, 0, 1], [0, 1, 0]],
        [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]],
        [[s, 0, 0], [0, s, 0], [0, 0, -2 * s]],
    ]
    return tuple(np.array(m, dtype=complex) for m in mats)


def su3_basis() -> Tuple[np.ndarray, ...]:
    """i lambda_a / sqrt 2, orthonormal for <A, B> = -tr(AB)."""
    return tuple(1j * m / np.sqrt(2.0) for m in _gell_mann())


def su3_from_coordinates(x: np.ndarray) -> np.ndarray:
    return sum(c * e for c, e in zip(np.asarray(x, float), su3_basis()))


@lru_cache(maxsize=None)
def su3_structure_3form() -> Form:
    """rho(X, Y, Z) = <[X, Y], Z> on su(3) = R^8 in the orthonormal basis."""
    basis = su3_basis()
    terms = []
    for a in range(8):
        for b in range(a + 1, 8):
            bracket = basis[a] @ basis[b] - basis[b] @ basis[a]
            for c in range(b + 1, 8):
                value = su3_inner(bracket, basis[c])
                if abs(value) > 1e-14:
                    terms.append(((a + 1, b + 1, c + 1), value))
    rho = Form.from_terms(8, 3, terms)
    logger.debug("su(3) structure form: %r", rho)
    return rho
