import json

import numpy as np
import pytest

from marginlab import kernels, lemma_lab
from marginlab import learners as L
from marginlab import orthopoly as op
from marginlab import sphere
from marginlab.sphere import RngStream


def test_band_report_json():
    rep = lemma_lab.BandReport(0.1, -0.2, 0.3, 5.0, (0.01, 0.02))
    doc = json.loads(rep.to_json())
    assert doc["gap"] == 0.3
    assert doc["std_errs"] == [0.01, 0.02]


def test_check_band_gap_linear_zonal():
    d, gamma = 8, 0.03
    f = op.PolyCoeffs(d, np.array([0.0, 1.0]))
    rep = lemma_lab.check_band_gap(f, np.eye(d)[0], gamma, K=5)
    assert rep.gap == pytest.approx(2 * gamma, rel=1e-12)
    assert rep.f_bar_plus == pytest.approx(gamma)
    assert rep.f_bar_minus == pytest.approx(-gamma)
    assert rep.gap <= rep.bound
    assert rep.std_errs == (0.0, 0.0)


def test_check_band_gap_kernel_section():
    # f = k(., x0) for the sss kernel: full Monte-Carlo pipeline
    d, gamma = 10, 0.01
    k = kernels.standard_kernel("sss")
    e = np.eye(d)[0]
    model = L.KernelModel(
        support=e[None, :], alpha=np.array([1.0]), b=0.0, C=1.0,
        kernel=k, loss=L.make_loss("hinge"),
    )
    rep = lemma_lab.check_band_gap(model, e, gamma, K=20, n_mc=256,
                                   rng=RngStream(1, 0))
    assert rep.gap <= rep.bound + 4 * sum(rep.std_errs)
    # the section is zonal about e, so the band means are exact values
    assert rep.f_bar_plus == pytest.approx(float(k.profile_value(gamma)), abs=1e-9)


def test_check_band_gap_violation_detected():
    # steep zonal function with a tiny claimed cutoff-free bound: use a raw
    # function whose gap is forced above the bound by shrinking the tail term
    # a pure degree-15 zonal term is all tail at K=1: with the tail constants
    # zeroed out the bound drops below the exact gap and the check must trip
    d = 5
    alpha = np.zeros(16)
    alpha[15] = 1.0
    f = op.PolyCoeffs(d, alpha)
    tight = op.TailConstants(E=1e-12, r=1e-12, s=1e-12)
    with pytest.raises(lemma_lab.GapViolationError):
        lemma_lab.check_band_gap(f, np.eye(d)[0], 0.05, K=1, consts=tight)


def test_check_band_gap_type_error():
    with pytest.raises(TypeError):
        lemma_lab.check_band_gap(lambda x: 0.0, np.eye(5)[0], 0.01, K=3)


def test_stabilizer_rotation_fixes_e():
    rng = RngStream(2, 0)
    for d in (3, 6):
        e = sphere.sample_unit_sphere(d, rng)
        for _ in range(5):
            A = lemma_lab.stabilizer_rotation(e, rng)
            assert np.allclose(A @ A.T, np.eye(d), atol=1e-12)
            assert np.allclose(A @ e, e, atol=1e-12)


def test_symmetrize_invariant_function_fixed_point():
    d = 6
    e = np.eye(d)[0]
    fn = lambda X: np.atleast_2d(X)[:, 0] ** 2  # already O(e)-invariant
    g = lemma_lab.symmetrize_function(fn, e, 32, RngStream(3, 0))
    assert np.allclose(g.values, g.grid**2, atol=1e-9)
    assert float(g(0.5)) == pytest.approx(0.25, abs=1e-6)


def test_symmetrize_orthogonal_linear_vanishes():
    d = 6
    e, v = np.eye(d)[0], np.eye(d)[1]
    fn = lambda X: np.atleast_2d(X) @ v
    g = lemma_lab.symmetrize_function(fn, e, 512, RngStream(4, 0))
    assert np.all(np.abs(g.values) <= 4 * g.std_errs + 1e-9)


def test_symmetrize_zonal_product_identity():
    # averaging P_{d,n}(<v, .>) over the stabilizer of e gives
    # P_{d,n}(<v, e>) P_{d,n}(a) at band height a
    d, n = 6, 3
    rng = RngStream(5, 0)
    e = np.eye(d)[0]
    v = sphere.sample_unit_sphere(d, rng)
    fn = lambda X: op.legendre_eval(d, n, np.atleast_2d(X) @ v)
    g = lemma_lab.symmetrize_function(fn, e, 3000, RngStream(6, 0))
    pred = op.legendre_eval(d, n, float(v @ e)) * op.legendre_eval(d, n, g.grid)
    assert np.all(np.abs(g.values - pred) <= 5 * g.std_errs + 2e-3)


def test_symmetrize_rotation_floor():
    with pytest.raises(ValueError):
        lemma_lab.symmetrize_function(lambda X: 0.0, np.eye(4)[0], 8)


def test_symmetrization_contracts_convex_error():
    # mean hinge loss of the symmetrized score profile is at most the
    # rotation-averaged loss of the original function (within MC noise)
    d = 6
    e = np.eye(d)[0]
    rng = RngStream(7, 0)
    w = sphere.sample_unit_sphere(d, rng)
    fn = lambda X: np.atleast_2d(X) @ w
    hinge = L.make_loss("hinge")
    heights = np.array([0.05, -0.05, 0.1])
    labels = np.array([1.0, -1.0, 1.0])
    reps = np.array([sphere.sample_band(e, a, rng) for a in heights])
    g = lemma_lab.symmetrize_function(fn, e, 1024, RngStream(8, 0),
                                      grid=np.linspace(-0.2, 0.2, 41))
    err_sym = float(np.mean(hinge.value(labels * g(heights))))
    rots = [lemma_lab.stabilizer_rotation(e, rng) for _ in range(1024)]
    losses = []
    for A in rots:
        scores = (reps @ A.T) @ w
        losses.append(float(np.mean(hinge.value(labels * scores))))
    avg_err = float(np.mean(losses))
    sigma = float(np.std(losses) / np.sqrt(len(losses))) + float(np.max(g.std_errs))
    assert err_sym <= avg_err + 4 * sigma + 1e-6
