import numpy as np
import pytest

from conftest import canonical_system, generator
from nonnoether.errors import FNotConserved, NotASymmetry, NotPoisson, UsageError
from nonnoether.expr import ONE, parse_expression, probabilistic_equal
from nonnoether.exterior import DifferentialForm, PointTensor, vector_field
from nonnoether.flow import IntegratorConfig
from nonnoether.invariants import (
    CANDIDATE,
    POISSON,
    PRESYMPLECTIC,
    REGULAR,
    InvariantSet,
    bracket_descent,
    charpoly_oracle,
    factorial_normalization,
    half_spectrum_coefficients,
    involution_check,
    lutzky_invariants,
    oracle_ratios,
    poisson_invariants,
    symmetry_form,
    yang_baxter_check,
)
from nonnoether.mechanics import POISSON as POISSON_BIVECTOR
from nonnoether.mechanics import PRESYMPLECTIC as PRESYMPLECTIC_FORM
from nonnoether.mechanics import PhaseSpaceSystem, kernel_and_pseudoinverse_at, poisson_counterpart, sample_points


def test_free_dilation_gives_a_constant(load, rng):
    loaded = load('free_dilation')
    inv = lutzky_invariants(loaded.system, loaded.generator, rng)
    assert inv.path == REGULAR
    assert inv.half_rank == 1
    assert inv[1].symbolic
    assert inv[1].expression == parse_expression('2')


def test_two_dof_invariants(two_dof, rng):
    inv = lutzky_invariants(two_dof.system, two_dof.generator, rng)
    assert [e.k for e in inv] == [1, 2]
    assert probabilistic_equal(inv[1].expression, parse_expression('p1 + p2'), rng=rng)
    assert probabilistic_equal(inv[2].expression, parse_expression('4*p1*p2'), rng=rng)
    x = np.array([0.5, 1.0, -0.25, 2.0])
    np.testing.assert_allclose(inv.evaluate(x), [3.0, 8.0])


def test_poisson_invariants_of_the_canonical_bivector(load, rng):
    loaded = load('poisson_canonical')
    inv = poisson_invariants(loaded.system, loaded.generator, rng=rng)
    assert inv.path == POISSON
    assert [e.k for e in inv] == [0, 1, 2]
    assert probabilistic_equal(inv[0].expression, parse_expression('p1*p2'), rng=rng)
    assert probabilistic_equal(inv[1].expression, parse_expression('-(p1 + p2)/2'), rng=rng)
    assert inv[2].expression.is_one
    assert inv[2].trivial
    assert [e.k for e in inv.nontrivial] == [0, 1]


def test_wrong_constructor_for_the_structure(load, two_dof, rng):
    loaded = load('poisson_canonical')
    with pytest.raises(UsageError):
        lutzky_invariants(loaded.system, loaded.generator, rng)
    with pytest.raises(UsageError):
        poisson_invariants(two_dof.system, two_dof.generator, rng=rng)


def test_non_jacobi_bivector_is_rejected(load, rng):
    loaded = load('non_jacobi')
    with pytest.raises(NotPoisson):
        poisson_invariants(loaded.system, loaded.generator, rng=rng)


def test_relativistic_invariants_depend_on_momenta_only(relativistic, rng):
    inv = lutzky_invariants(relativistic.system, relativistic.generator, rng)
    assert inv.path == PRESYMPLECTIC
    assert inv.half_rank == 3
    assert not any(e.symbolic for e in inv)
    x = np.array([0.1, -0.7, 1.3, 0.4, 0.6, -0.2, 0.9])
    y = x.copy()
    y[:4] = [1.9, 0.2, -1.1, -0.5]
    np.testing.assert_allclose(inv.evaluate(x), inv.evaluate(y), rtol=1e-9, atol=1e-12)


def test_relativistic_invariants_are_in_involution(relativistic, rng):
    inv = lutzky_invariants(relativistic.system, relativistic.generator, rng)
    report = involution_check(inv, relativistic.system, tol=1e-5, rng=rng, points=5)
    assert report.ok
    assert report.residuals.shape == (3, 3)


def test_representative_independence_when_the_kernel_annihilates(rng):
    chart = ('q', 'p', 's')
    omega = DifferentialForm.from_terms(chart, 2, [(('p', 'q'), ONE)])
    sys = PhaseSpaceSystem(coordinates=chart, structure=omega, hamiltonian=parse_expression('p^2/2'),
                           structure_kind=PRESYMPLECTIC_FORM,
                           kernel=(vector_field(chart, {'s': ONE}),), name='cylinder')
    inv = lutzky_invariants(sys, generator(chart, q='q*p^2', p='p^3'), rng)
    assert inv.half_rank == 1
    assert inv.representative_dependence < 1e-12
    for x in rng.uniform(-2, 2, size=(5, 3)):
        assert inv[1](x) == pytest.approx(4 * x[1] ** 2, rel=1e-9, abs=1e-10)


@pytest.mark.parametrize('name', ['two_dof_momenta', 'free_dilation', 'relativistic_particle'])
def test_oracle_ratio_is_factorial_squared(load, rng, name):
    loaded = load(name)
    inv = lutzky_invariants(loaded.system, loaded.generator, rng)
    points = rng.uniform(-2, 2, size=(4, loaded.system.dim))
    ratios = oracle_ratios(inv, loaded.system, loaded.generator, points)
    expected = np.array([factorial_normalization(e.k) for e in inv])
    mask = ~np.isnan(ratios)
    assert mask.any()
    np.testing.assert_allclose(ratios[mask], np.broadcast_to(expected, ratios.shape)[mask], rtol=1e-6)


def test_charpoly_of_two_dof(two_dof):
    x = np.array([0.5, 1.0, -0.25, 2.0])
    c = charpoly_oracle(two_dof.system, two_dof.generator, x)
    np.testing.assert_allclose(c[:3], [1.0, 6.0, 1.0 + 4.0 + 8.0], atol=1e-12)
    q = half_spectrum_coefficients(c)
    np.testing.assert_allclose(q, [3.0, 2.0], atol=1e-12)


def test_half_spectrum_of_a_square():
    a, b = 0.7, -1.3
    coefficients = np.polymul([b, a, 1.0], [b, a, 1.0])[::-1]
    np.testing.assert_allclose(half_spectrum_coefficients(coefficients), [a, b])
    assert factorial_normalization(3) == 36


def test_yang_baxter(load, two_dof, relativistic, rng):
    assert yang_baxter_check(two_dof.system, two_dof.generator, rng)
    not_applicable = yang_baxter_check(relativistic.system, relativistic.generator, rng)
    assert not not_applicable.applicable
    assert np.isnan(not_applicable.residual)
    coupled = yang_baxter_check(two_dof.system, generator(two_dof.system.coordinates, q1='p2*q1'), rng)
    assert coupled.applicable
    assert not coupled


def test_two_dof_involution(two_dof, rng):
    inv = lutzky_invariants(two_dof.system, two_dof.generator, rng)
    assert involution_check(inv, two_dof.system, rng=rng)


def test_candidates_not_in_involution(two_dof, rng):
    inv = InvariantSet.from_expressions(two_dof.system, [parse_expression('q1'), parse_expression('p1')],
                                        labels=['q1', 'p1'])
    assert inv.path == CANDIDATE
    report = involution_check(inv, two_dof.system, rng=rng)
    assert not report
    assert report.residuals[0, 1] == pytest.approx(1.0)


def test_bracket_descent(two_dof, rng):
    inv = lutzky_invariants(two_dof.system, two_dof.generator, rng)
    cfg = IntegratorConfig(step=1e-2, time=1.0)
    points = [np.array([0.5, 1.0, -0.25, 2.0])]
    brackets = bracket_descent(inv, parse_expression('q1*p2 - q2*p1'), two_dof.system, points, cfg, rng=rng)
    assert [e.name for e in brackets] == ['{I(1), f}', '{I(2), f}']
    assert probabilistic_equal(brackets[1].expression, parse_expression('p2 - p1'), rng=rng)
    assert probabilistic_equal(brackets[2].expression, parse_expression('4*(p2^2 - p1^2)'), rng=rng)


def test_bracket_descent_needs_a_conserved_function(two_dof, rng):
    inv = lutzky_invariants(two_dof.system, two_dof.generator, rng)
    cfg = IntegratorConfig(step=1e-2, time=1.0)
    with pytest.raises(FNotConserved):
        bracket_descent(inv, parse_expression('q1'), two_dof.system, [np.array([0.5, 1.0, -0.25, 2.0])], cfg)


def test_missing_order_raises_key_error(free_particle, rng):
    inv = lutzky_invariants(free_particle, generator(free_particle.coordinates, q='q', p='p'), rng)
    with pytest.raises(KeyError):
        inv[2]


def test_lutzky_on_a_system_built_in_code(rng):
    sys = canonical_system(('q1', 'p1', 'q2', 'p2'), hamiltonian='(p1^2 + p2^2)/2')
    inv = lutzky_invariants(sys, generator(sys.coordinates, q1='p1*q1', q2='p2*q2'), rng)
    assert probabilistic_equal(inv[1].expression, parse_expression('p1 + p2'), rng=rng)


def test_non_symmetry_is_refused(load, rng):
    loaded = load('non_symmetry')
    with pytest.raises(NotASymmetry, match='not a symmetry'):
        lutzky_invariants(loaded.system, loaded.generator, rng)


def test_poisson_non_symmetry_is_refused(rng):
    sys = canonical_system(kind=POISSON_BIVECTOR, name='poisson_non_symmetry')
    with pytest.raises(NotASymmetry):
        poisson_invariants(sys, generator(sys.coordinates, p='p*q'), rng=rng)


def test_presymplectic_commutator_outside_the_kernel_is_refused(rng):
    chart = ('q', 'p', 's')
    omega = DifferentialForm.from_terms(chart, 2, [(('p', 'q'), ONE)])
    sys = PhaseSpaceSystem(coordinates=chart, structure=omega, hamiltonian=parse_expression('p^2/2'),
                           structure_kind=PRESYMPLECTIC_FORM,
                           kernel=(vector_field(chart, {'s': ONE}),), name='cylinder')
    with pytest.raises(NotASymmetry):
        lutzky_invariants(sys, generator(chart, q='p*q', s='s'), rng)


def test_kernel_wedges_leave_the_invariants_unchanged(rng):
    chart = ('q1', 'p1', 'q2', 'p2', 's')
    omega = DifferentialForm.from_terms(chart, 2, [(('p1', 'q1'), ONE), (('p2', 'q2'), ONE)])
    sys = PhaseSpaceSystem(coordinates=chart, structure=omega, hamiltonian=parse_expression('(p1^2 + p2^2)/2'),
                           structure_kind=PRESYMPLECTIC_FORM,
                           kernel=(vector_field(chart, {'s': ONE}),), name='two_dof_cylinder')
    gen = generator(chart, q1='q1*p1^2', p1='p1^3', q2='q2*p2^2', p2='p2^3')
    inv = lutzky_invariants(sys, gen, rng)
    assert inv.half_rank == 2
    theta_form = symmetry_form(sys, gen, rng)
    for x in sample_points(sys, rng, 5):
        split = kernel_and_pseudoinverse_at(sys, x)
        theta = theta_form.at(x)
        expected = inv.evaluate(x)
        for _ in range(10):
            v = PointTensor.from_vector(rng.uniform(-1, 1, size=sys.dim))
            W = split.bivector + v.wedge(split.kernel[0])
            got = [W.pair(theta), W.wedge(W).pair(theta.wedge(theta))]
            np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-10)


def test_two_form_and_bivector_paths_agree(two_dof, rng):
    sys, gen = two_dof.system, two_dof.generator
    lutzky = lutzky_invariants(sys, gen, rng)
    poisson = poisson_invariants(poisson_counterpart(sys, rng), gen, rng=rng)
    for x in sample_points(sys, rng, 10):
        assert lutzky[1](x) == pytest.approx(-2 * poisson[1](x), rel=1e-9, abs=1e-12)
        assert lutzky[2](x) == pytest.approx(4 * poisson[0](x), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize('name', ['two_dof_momenta', 'relativistic_particle'])
def test_oracle_constants_hold_over_fifty_points(load, rng, name):
    loaded = load(name)
    sys = loaded.system
    inv = lutzky_invariants(sys, loaded.generator, rng)
    points = sample_points(sys, rng, 50)
    ratios = oracle_ratios(inv, sys, loaded.generator, points)
    values = np.array([inv.evaluate(x) for x in points])
    for column, value in zip(ratios.T, values.T):
        usable = column[~np.isnan(column) & (np.abs(value) > 1e-3)]
        assert usable.size >= 30
        np.testing.assert_allclose(usable, usable[0], rtol=1e-8)
