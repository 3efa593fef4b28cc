import numpy as np
import pytest

from stableforms import stability, structures
from stableforms.errors import DegreeError, NotStableError
from stableforms.exterior import Form, hodge_star, pullback, top_pair, wedge
from stableforms.stability import StabilityClass

CASES = [
    (4, 2),
    (6, 2),
    (8, 2),
    (6, 4),
    (8, 6),
    (6, 3),
    (7, 3),
    (7, 4),
    (8, 3),
    (8, 5),
]


def e(n, *indices):
    return Form.basis_form(n, *indices)


def test_normal_su3_form_volume():
    result = stability.volume(structures.su3_normal_pair().rho)
    assert result.stability_class is StabilityClass.SL3C
    # the normal form has phi = 2
    assert result.phi == pytest.approx(2.0, rel=1e-12)


def test_normal_g2_forms_volume():
    phi, star_phi = structures.g2_normal_forms()
    assert stability.volume(phi).stability_class is StabilityClass.G2
    assert stability.volume(phi).phi == pytest.approx(3.0, rel=1e-12)
    assert stability.volume(star_phi).phi == pytest.approx(4.0, rel=1e-12)


def test_su3_structure_form_is_psu3():
    rho = structures.su3_structure_3form()
    assert stability.volume(rho).stability_class is StabilityClass.PSU3
    # the dual 5-form is stable too
    dual = stability.volume(-hodge_star(rho))
    assert dual.stability_class is StabilityClass.PSU3


def test_standard_symplectic_volume():
    result = stability.volume(structures.standard_symplectic(6))
    assert result.stability_class is StabilityClass.SYMPLECTIC
    assert result.phi == pytest.approx(1.0)


def test_split_real_form_is_other_real_form():
    rho = e(6, 1, 2, 3) + e(6, 4, 5, 6)
    result = stability.volume(rho)
    assert result.stability_class is StabilityClass.OTHER_REAL_FORM
    with pytest.raises(NotStableError) as excinfo:
        stability.require_stable(rho)
    # the error carries the orbit tag
    assert excinfo.value.stability_class == "StableOtherRealForm"


@pytest.mark.parametrize(
    "rho",
    [e(6, 1, 2, 3), e(4, 1, 2), e(7, 1, 2, 3), Form.zero(8, 3)],
)
def test_degenerate_forms_are_not_stable(rho):
    result = stability.volume(rho)
    assert result.stability_class is StabilityClass.NOT_STABLE
    assert result.phi == 0.0
    with pytest.raises(NotStableError):
        stability.require_stable(rho)


def test_unsupported_case():
    # odd dimensions have no stable 2-forms
    assert not stability.supported(5, 2)
    assert stability.supported(8, 5)
    with pytest.raises(DegreeError):
        stability.volume(e(5, 1, 2))


@pytest.mark.parametrize("n, p", CASES)
def test_euler_identity_closed_dual(n, p, rng):
    for _ in range(20):
        rho = stability.random_stable_form(n, p, rng)
        # rho-hat ^ rho = (n / p) phi(rho)
        assert stability.euler_residual(rho) < 1e-10


@pytest.mark.parametrize("n, p", CASES)
def test_euler_identity_numeric_dual(n, p, rng):
    for _ in range(20):
        rho = stability.random_stable_form(n, p, rng)
        residual = stability.euler_residual(rho, stability.dual_form_numeric)
        # finite differences only reach about 1e-8
        assert residual < 1e-6


@pytest.mark.parametrize("n, p", CASES)
def test_volume_is_homogeneous(n, p, rng):
    for _ in range(20):
        rho = stability.random_stable_form(n, p, rng)
        phi = stability.volume(rho).phi
        for lam in (0.5, 2.0, 3.0):
            scaled = stability.volume(rho * lam).phi
            # degree n / p in the form
            assert scaled == pytest.approx(lam ** (n / p) * phi)


@pytest.mark.parametrize("n, p", CASES)
def test_volume_is_equivariant(n, p, rng):
    rho = stability.random_stable_form(n, p, rng)
    a = np.eye(n) + 0.2 * rng.standard_normal((n, n))
    det = np.linalg.det(a)
    # phi(A* rho) = |det A| phi(rho)
    assert stability.volume(pullback(rho, a)).phi == pytest.approx(
        abs(det) * stability.volume(rho).phi, rel=1e-8
    )


@pytest.mark.parametrize("n, p", [(7, 3), (7, 4), (8, 3)])
def test_closed_and_numeric_duals_agree(n, p, rng):
    for _ in range(20):
        rho = stability.random_stable_form(n, p, rng)
        closed = stability.dual_form_closed(rho)
        numeric = stability.dual_form_numeric(rho)
        # agreement up to finite difference error
        assert (closed - numeric).norm_inf() < 1e-6 * closed.norm_inf()


def test_closed_dual_of_normal_forms():
    pair = structures.su3_normal_pair()
    assert stability.dual_form_closed(pair.rho).allclose(
        structures.su3_normal_rho_hat(), atol=1e-12
    )
    phi, star_phi = structures.g2_normal_forms()
    assert stability.dual_form_closed(phi).allclose(star_phi, atol=1e-12)


def test_dual_of_symplectic_form():
    omega = structures.standard_symplectic(8)
    # omega-hat = omega^3 / 3!
    expected = wedge(wedge(omega, omega), omega) / 6.0
    assert stability.dual_form_closed(omega).allclose(expected)


def test_symplectic_from_dual_recovers_omega():
    omega = structures.standard_symplectic(6)
    sigma = wedge(omega, omega) / 2.0
    recovered = stability.symplectic_from_dual(sigma)
    # sigma only fixes omega up to sign
    assert recovered.allclose(omega) or recovered.allclose(-omega)


def test_metric_of_normal_forms_is_identity():
    phi, star_phi = structures.g2_normal_forms()
    g = stability.metric_from_form(phi).metric
    assert np.max(np.abs(g - np.eye(7))) < 1e-10
    assert np.allclose(stability.metric_from_form(star_phi).metric, np.eye(7))
    rho = structures.su3_structure_3form()
    # the su(3) basis is orthonormal
    assert np.allclose(stability.metric_from_form(rho).metric, np.eye(8))


def test_metric_is_equivariant(rng):
    phi, _ = structures.g2_normal_forms()
    a = np.eye(7) + 0.2 * rng.standard_normal((7, 7))
    if np.linalg.det(a) < 0:
        a[:, 0] *= -1.0
    g = stability.metric_from_form(pullback(phi, a))
    # g(A* phi) = A^T g(phi) A
    assert np.allclose(g.metric, a.T @ a, rtol=1e-8, atol=1e-10)
    assert g.vol == pytest.approx(abs(np.linalg.det(a)))


def test_metric_needs_nondegenerate_form():
    with pytest.raises(NotStableError):
        stability.metric_from_form(e(7, 1, 2, 3) + e(7, 4, 5, 6))


def test_almost_complex_structure(rng):
    for _ in range(100):
        rho = stability.random_stable_form(6, 3, rng)
        acs = stability.acs_from_rho(rho).matrix
        assert np.allclose(acs @ acs, -np.eye(6), atol=1e-10)
    # rho + i rho-hat is of type (3, 0)
    assert stability.type_30_residual(rho) < 1e-8 * rho.norm_inf()
    re, im = stability.complex_form(rho)
    assert top_pair(im, re) > 0


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_acs_is_scale_invariant(lam, rng):
    for _ in range(10):
        rho = stability.random_stable_form(6, 3, rng)
        acs = stability.acs_from_rho(rho).matrix
        scaled = stability.acs_from_rho(rho * lam).matrix
        # K scales by lam^2 and the normalization removes it
        assert np.allclose(scaled, acs, atol=1e-10)


def test_k_squared_is_scalar(rng):
    for _ in range(5):
        rho = stability.random_stable_form(6, 3, rng)
        k = stability.k_map(rho).matrix
        scalar = np.trace(k @ k) / 6.0
        # K^2 = lambda(rho) Id with lambda < 0 on SL(3, C) forms
        assert scalar < 0
        assert np.allclose(k @ k, scalar * np.eye(6), atol=1e-10 * abs(scalar))


def test_acs_rejects_split_form():
    with pytest.raises(NotStableError):
        stability.acs_from_rho(e(6, 1, 2, 3) + e(6, 4, 5, 6))
