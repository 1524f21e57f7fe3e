"""Tests for the coefficient catalog and per-element coefficient statistics."""

import math

import numpy as np
import pytest

from eigenfem import (CATALOG_NAMES, REFERENCE_VALUES, CoefficientError,
                      catalog, check_assumptions, coefficients_from_json,
                      element_stats, generate_structured)


def test_catalog_names_complete():
    assert set(CATALOG_NAMES) == {"laplace", "ex5_1", "ex5_2", "ex5_3",
                                  "ex5_4", "ex5_5k10", "ex5_5k100"}
    for name in CATALOG_NAMES:
        c = catalog(name)
        assert c.dim == 2
        assert c.label == name


def test_catalog_unknown():
    with pytest.raises(CoefficientError):
        catalog("nope")


def test_reference_values():
    assert abs(REFERENCE_VALUES["laplace"] - 2 * math.pi ** 2) <= 1e-12
    assert REFERENCE_VALUES["ex5_1"] == 150.288
    assert REFERENCE_VALUES["ex5_2"] == 1401.39
    assert REFERENCE_VALUES["ex5_3"] == 21.0714
    assert REFERENCE_VALUES["ex5_4"] == 687.666
    assert REFERENCE_VALUES["ex5_5k10"] == 170.422
    assert REFERENCE_VALUES["ex5_5k100"] == 1020.15


def test_constant_diffusion_eigen_range():
    m = generate_structured("mesh45", 3)
    st = element_stats(catalog("ex5_1"), m, 0)
    # D = [[10, 9], [9, 10]] has eigenvalues 1 and 19
    assert abs(st.lambda_min_DK - 1.0) <= 1e-12
    assert abs(st.lambda_max_DK - 19.0) <= 1e-12
    assert st.b_sup == 0.0 and st.c_sup == 0.0


def test_ex5_2_convection_sup():
    m = generate_structured("mesh45", 3)
    st = element_stats(catalog("ex5_2"), m, 0)
    assert abs(st.b_sup - 50.0 * math.sqrt(2.0)) <= 1e-12
    assert abs(st.c_sup - 1.0) <= 1e-12


def test_ex5_3_divergence_free():
    c = catalog("ex5_3")
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.uniform(0, 1, size=2)
        assert c.convection_divergence(x) == 0.0
        b = c.convection(x)
        assert abs(b[0] - 20.0 * (x[1] - 0.5)) <= 1e-14
        assert abs(b[1] + 20.0 * (x[0] - 0.5)) <= 1e-14


def test_ex5_4_diagonal_anisotropy():
    c = catalog("ex5_4")
    x = np.array([0.5, 0.5])
    D = c.diffusion(x)
    s = math.sin(0.25 * math.pi)
    assert abs(D[0, 0] - 100.0 * (1.0 - 0.5 * s)) <= 1e-12
    assert abs(D[1, 1] - (1.0 + 0.5 * math.cos(0.25 * math.pi))) <= 1e-12
    assert D[0, 1] == 0.0 and D[1, 0] == 0.0


def test_ex5_5_eigenvalue_invariants():
    # the rotated tensor has eigenvalues k(1 - 0.5 sin x sin y) and
    # 1 + 0.5 cos x cos y regardless of the rotation angle
    for name, k in (("ex5_5k10", 10.0), ("ex5_5k100", 100.0)):
        c = catalog(name)
        rng = np.random.default_rng(13)
        for _ in range(20):
            x = rng.uniform(0, 1, size=2)
            lam = np.linalg.eigvalsh(c.diffusion(x))
            d1 = k * (1.0 - 0.5 * math.sin(x[0]) * math.sin(x[1]))
            d2 = 1.0 + 0.5 * math.cos(x[0]) * math.cos(x[1])
            assert np.allclose(sorted(lam), sorted([d1, d2]), rtol=1e-12)


def test_assumptions_hold_on_grid():
    # SPD diffusion and c - div(b)/2 >= 0 across the domain for every
    # catalog problem; check_assumptions raises on the first violation
    pts = np.array([[x, y] for x in np.linspace(0, 1, 11)
                    for y in np.linspace(0, 1, 11)])
    for name in CATALOG_NAMES:
        check_assumptions(catalog(name), pts)


def test_assumptions_reject_bad_reaction():
    c = coefficients_from_json('{"diffusion": [[1.0, 0.0], [0.0, 1.0]], '
                               '"convection": [0, 0], "reaction": 0.0}')
    bad = type(c)(label="bad", dim=2, diffusion=c.diffusion,
                  convection=c.convection, reaction=lambda x: -1.0,
                  convection_divergence=c.convection_divergence,
                  convection_is_zero=True)
    with pytest.raises(CoefficientError):
        check_assumptions(bad, np.array([[0.5, 0.5]]))


def test_element_stats_quadrature_average():
    # for ex5_4 the element average of a smooth D differs from any vertex
    # value but stays within the elementwise min/max of the sampled entries
    m = generate_structured("mesh45", 5)
    c = catalog("ex5_4")
    st = element_stats(c, m, 7)
    X = m.vertices[m.elements[7]]
    vals = np.array([c.diffusion(x)[0, 0] for x in X])
    assert vals.min() - 1e-9 <= st.D_K[0, 0] <= vals.max() + 1e-9


def test_symmetry_flags():
    assert catalog("laplace").is_symmetric
    assert catalog("ex5_1").is_symmetric
    assert not catalog("ex5_2").is_symmetric
    assert not catalog("ex5_3").is_symmetric
    assert catalog("ex5_4").is_symmetric
    assert catalog("ex5_5k100").is_symmetric


def test_coefficients_from_json():
    spec = ('{"label": "custom", "diffusion": [[2.0, 0.0], [0.0, 3.0]], '
            '"convection": [1.0, -1.0], "reaction": 0.5}')
    c = coefficients_from_json(spec)
    assert c.dim == 2
    x = np.array([0.3, 0.4])
    assert np.allclose(c.diffusion(x), [[2.0, 0.0], [0.0, 3.0]])
    assert np.allclose(c.convection(x), [1.0, -1.0])
    assert c.reaction(x) == 0.5
    assert c.convection_divergence(x) == 0.0


def test_coefficients_from_json_rejects_bad():
    with pytest.raises(CoefficientError):
        coefficients_from_json('{"diffusion": [[1.0, 2.0], [2.0, 1.0]], '
                               '"convection": [0, 0], "reaction": 0}')
    with pytest.raises(CoefficientError):
        coefficients_from_json('{"diffusion": [[1.0, 0.0], [0.0, 1.0]], '
                               '"convection": [0, 0], "reaction": -1.0}')
