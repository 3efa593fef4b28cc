import numpy as np
import pytest

from stableforms import stability, structures
from stableforms.errors import (
    CompatibilityError,
    DimensionError,
    ParameterError,
)
from stableforms.exterior import Form, evaluate, hodge_star, wedge


def test_normal_pair_is_compatible():
    report = structures.check_compat(structures.su3_normal_pair())
    # omega ^ rho = 0
    assert report.primitive
    assert report.positive_type
    assert report.c == pytest.approx(structures.COMPAT_CONSTANT, rel=1e-12)


def test_flipped_omega_is_not_positive_type():
    pair = structures.su3_normal_pair()
    # -omega gives a negative definite metric
    flipped = structures.SU3Pair(pair.rho, -pair.omega)
    assert not structures.positive_type(flipped)
    assert not structures.is_compatible(flipped)


def test_pair_checks_dimensions():
    with pytest.raises(DimensionError):
        structures.SU3Pair(Form.zero(7, 3), Form.zero(6, 2))


def test_assemble_normal_pair_gives_g2_form():
    phi, star_phi = structures.g2_normal_forms()
    pair = structures.su3_normal_pair()
    assert structures.assemble_7d(pair).allclose(phi, atol=1e-12)
    assert structures.expected_star_7d(pair).allclose(star_phi, atol=1e-12)


def test_assemble_rejects_rescaled_omega():
    # phi(rho) = 2 phi(sigma) no longer holds
    pair = structures.su3_normal_pair().scaled(1.0, 2.0)
    with pytest.raises(CompatibilityError):
        structures.assemble_7d(pair)


@pytest.mark.parametrize("dt_scale", [1.0, 0.5, 3.0])
def test_star_of_assembled_form(dt_scale, rng):
    for _ in range(3):
        pair = structures.random_compatible_pair(rng)
        phi = structures.assemble_7d(pair, dt_scale)
        assert stability.volume(phi).stability_class.value == "G2"
        expected = structures.expected_star_7d(pair, dt_scale)
        assert structures.star_7d(phi).allclose(expected, rtol=1e-8, atol=1e-9)


def test_assembled_metric_restricts_to_pair_metric(rng):
    pair = structures.random_compatible_pair(rng)
    g7 = stability.metric_from_form(structures.assemble_7d(pair, 2.0)).metric
    # dt scaled by 2 has length 2
    assert g7[6, 6] == pytest.approx(4.0)
    assert np.allclose(g7[:6, 6], 0.0, atol=1e-9)
    # omega(X, Y) = g(IX, Y)
    acs = stability.acs_from_rho(pair.rho).matrix
    omega = structures.two_form_matrix(pair.omega)
    assert np.allclose(omega, acs.T @ g7[:6, :6], atol=1e-8)


def test_decompose_inverts_assembly(rng):
    pair = structures.random_compatible_pair(rng)
    # split along dt
    back = structures.decompose_7d(structures.assemble_7d(pair))
    assert back.rho.allclose(pair.rho)
    assert back.omega.allclose(pair.omega)


def test_pair_from_forms_recovers_omega(rng):
    pair = structures.random_compatible_pair(rng)
    rebuilt = structures.SU3Pair.from_forms(pair.rho, pair.sigma)
    assert rebuilt.omega.allclose(pair.omega, rtol=1e-8, atol=1e-9)


def test_volume_and_euler_identities_for_pairs(rng):
    for _ in range(5):
        pair = structures.random_compatible_pair(rng)
        phi_rho = stability.volume(pair.rho).phi
        phi_sigma = stability.volume(pair.sigma).phi
        # compatible pairs have phi(rho) = 2 phi(sigma)
        assert phi_rho == pytest.approx(2.0 * phi_sigma, rel=1e-10)
        top = wedge(wedge(pair.omega, pair.omega), pair.omega).top_coefficient()
        assert abs(top) / 6.0 == pytest.approx(phi_sigma, rel=1e-10)


@pytest.mark.parametrize("r, lam", [(2.0, 0.5), (0.5, 1.0), (1.0, 2.0)])
def test_cone_star_matches_hodge_star(r, lam, rng):
    pair = structures.random_compatible_pair(rng)
    phi = structures.cone_form(pair, r, lam)
    expected = structures.cone_star(pair, r, lam)
    assert structures.star_7d(phi).allclose(expected, rtol=1e-8, atol=1e-8)


def test_cone_metric_has_radial_block():
    pair = structures.su3_normal_pair()
    r, lam = 2.0, 0.5
    g = stability.metric_from_form(structures.cone_form(pair, r, lam)).metric
    # dr / lam has unit length
    assert g[6, 6] == pytest.approx(1.0 / lam**2)
    assert np.allclose(g[:6, :6], r**2 * np.eye(6))


def test_spin7_form_is_self_dual(rng):
    phi, _ = structures.g2_normal_forms()
    cayley = structures.spin7_form(phi)
    # dt ^ phi + *phi is self-dual
    assert hodge_star(cayley).allclose(cayley, atol=1e-12)
    assert cayley.degree == 4 and cayley.dim == 8


def test_spin7_form_self_dual_for_pulled_back_phi(rng):
    phi = stability.random_stable_form(7, 3, rng)
    cayley = structures.spin7_form(phi)
    g = np.eye(8)
    g[:7, :7] = stability.metric_from_form(phi).metric
    assert hodge_star(cayley, g).allclose(cayley, rtol=1e-8, atol=1e-9)


def test_spin7_form_needs_7d_3form():
    with pytest.raises(DimensionError):
        structures.spin7_form(Form.zero(7, 4))


def test_primitivity_passes_to_rho_hat(rng):
    for _ in range(50):
        pair = structures.random_compatible_pair(rng)
        scale = pair.omega.norm_inf() * pair.rho.norm_inf()
        assert wedge(pair.omega, pair.rho).is_zero(atol=1e-12 * scale)
        # omega ^ rho = 0 forces omega ^ rho-hat = 0
        assert wedge(pair.omega, pair.rho_hat).is_zero(atol=1e-10 * scale)


def test_residuals_of_zero_derivatives():
    pair = structures.su3_normal_pair()
    first, second = structures.nearly_kahler_residuals(
        Form.zero(6, 4), Form.zero(6, 3), pair, 0.5
    )
    # omega^2 of the normal pair has unit coefficients
    assert first == pytest.approx(2.0)
    assert second == pytest.approx(1.5)
    assert structures.weak_g2_residual(
        Form.zero(6, 3), pair.rho, -2.0
    ) == pytest.approx(2.0)


def test_su3_cross_of_diagonal_element():
    a = 1j * np.diag([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    assert np.allclose(structures.su3_cross(a, a), a / np.sqrt(2.0))


def test_su3_cross_norm_ratio_is_constant(rng):
    ratios = []
    for _ in range(1000):
        a = structures.su3_from_coordinates(rng.standard_normal(8))
        b = structures.su3_from_coordinates(rng.standard_normal(8))
        cross = structures.su3_cross(a, b)
        # closed in su(3)
        structures.check_su3(cross, tol=1e-12)
        norm = structures.su3_norm(cross)
        ratios.append(norm / (structures.su3_norm(a) * structures.su3_norm(b)))
    # |a x b| / (|a| |b|) is the same for every pair
    assert np.std(ratios) < 1e-10


def test_su3_cross_is_bilinear(rng):
    a, b, c = (
        structures.su3_from_coordinates(v) for v in rng.standard_normal((3, 8))
    )
    left = structures.su3_cross(2.0 * a + c, b)
    right = 2.0 * structures.su3_cross(a, b) + structures.su3_cross(c, b)
    assert np.allclose(left, right)


def test_su3_basis_is_orthonormal():
    basis = structures.su3_basis()
    gram = np.array(
        [[structures.su3_inner(x, y) for y in basis] for x in basis]
    )
    # eight orthonormal generators
    assert np.allclose(gram, np.eye(8))


def test_check_su3_rejects_non_members():
    # hermitian, not skew-hermitian
    with pytest.raises(ParameterError):
        structures.check_su3(np.eye(3))
    with pytest.raises(ParameterError, match="traceless"):
        structures.check_su3(1j * np.eye(3))
    with pytest.raises(DimensionError):
        structures.check_su3(np.zeros((2, 2)))


def test_structure_form_evaluates_brackets(rng):
    rho = structures.su3_structure_3form()
    x, y, z = (rng.standard_normal(8) for _ in range(3))
    a, b, c = (structures.su3_from_coordinates(v) for v in (x, y, z))
    bracket = a @ b - b @ a
    # rho(x, y, z) = <[x, y], z>
    expected = structures.su3_inner(bracket, c)
    assert evaluate(rho, x, y, z) == pytest.approx(expected)
