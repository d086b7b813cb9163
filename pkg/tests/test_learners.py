import math

import numpy as np
import pytest
from scipy.optimize import linprog

from marginlab import kernels
from marginlab import learners as L
from marginlab.measures import LabeledPoint
from marginlab.sphere import RngStream


def lift(atoms, d=6):
    """Embed 1-D atoms at t e1 inside the ball; with the linear kernel the
    program is exactly the slope/bias problem."""
    X = np.zeros((len(atoms), d))
    X[:, 0] = [a[0] for a in atoms]
    y = np.array([a[1] for a in atoms], dtype=float)
    w = np.array([a[2] for a in atoms], dtype=float)
    return X, y, w


def hinge_lp_oracle(atoms, C, bias_half=None):
    """Exact 1-D hinge optimum via linear programming (independent oracle)."""
    t = np.array([a[0] for a in atoms])
    y = np.array([a[1] for a in atoms], dtype=float)
    w = np.array([a[2] for a in atoms], dtype=float)
    w = w / w.sum()
    n = len(atoms)
    if bias_half is None:
        bias_half = max(2.0 * C, 1.0)
    # variables: slope, bias, xi_1..xi_n;  xi_i >= 1 - y_i (s t_i + b)
    A_ub = np.zeros((n, n + 2))
    A_ub[:, 0] = -y * t
    A_ub[:, 1] = -y
    A_ub[:, 2:] = -np.eye(n)
    b_ub = -np.ones(n)
    bounds = [(-C, C), (-bias_half, bias_half)] + [(0, None)] * n
    c = np.concatenate([[0.0, 0.0], w])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


# ---------------------------------------------------------------------------
# Losses.
# ---------------------------------------------------------------------------

def test_loss_values_and_slopes():
    x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    hinge = L.make_loss("hinge")
    assert np.allclose(hinge.value(x), [2.0, 1.0, 0.5, 0.0, 0.0])
    assert hinge.d_plus_at_0 == -1.0
    sq = L.make_loss("squared")
    assert np.allclose(sq.value(x), (1 - x) ** 2)
    assert sq.d_plus_at_0 == -2.0
    assert sq.lipschitz == math.inf
    absv = L.make_loss("absolute")
    assert np.allclose(absv.value(x), np.abs(1 - x))
    logi = L.make_loss("logistic")
    assert logi.at_zero == pytest.approx(1.0)
    assert logi.d_plus_at_0 == pytest.approx(-1.0 / (2 * math.log(2)))
    # subgradient is a finite-difference slope up to convexity
    h = 1e-7
    num = (logi.value(np.array(h)) - logi.value(np.array(-h))) / (2 * h)
    assert float(num) == pytest.approx(logi.d_plus_at_0, abs=1e-6)
    with pytest.raises(L.LossError):
        L.make_loss("nope")


def test_margin_losses():
    C = 4.0
    ml = L.make_loss("margin_loss", gamma=0.01, C=C)
    x = np.array([-1.0, 0.0, 1.0 / C, 0.5, 2.0])
    assert np.allclose(ml.value(x), [2.0, 1.0, 0.75, 0.75, 0.75])
    tm = L.make_loss("truncated_margin", gamma=0.01, C=C)
    assert np.allclose(tm.value(x), np.maximum(1 - C * x, 0.0))
    assert tm.d_plus_at_0 == -C
    with pytest.raises(L.LossError):
        L.make_loss("margin_loss", gamma=0.01, C=0.0)


def test_truncated_margin_scaling_identity():
    # mean truncated-margin loss of f equals mean hinge loss of C*f
    C = 7.0
    tm = L.make_loss("truncated_margin", gamma=0.02, C=C)
    hinge = L.make_loss("hinge")
    rng = np.random.default_rng(0)
    margins = rng.standard_normal(1000)
    lhs = tm.value(margins).mean()
    rhs = hinge.value(C * margins).mean()
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_all_losses_dominate_01():
    x = np.linspace(-3, 3, 61)
    for name in ("hinge", "squared", "absolute", "logistic"):
        loss = L.make_loss(name)
        assert np.all(loss.value(x) >= (x <= 0).astype(float) - 1e-12)


# ---------------------------------------------------------------------------
# Projections.
# ---------------------------------------------------------------------------

def test_project_l1():
    v = np.array([3.0, -1.0, 0.5])
    p = L.project_l1(v, 2.0)
    assert np.abs(p).sum() == pytest.approx(2.0)
    # projection is a contraction toward v
    assert np.linalg.norm(p - v) <= np.linalg.norm(v)
    inside = np.array([0.2, -0.1])
    assert np.array_equal(L.project_l1(inside, 1.0), inside)
    assert np.array_equal(L.project_l1(v, 0.0), np.zeros(3))
    # matches a dense search on a 2-D example
    v2 = np.array([1.0, 1.0])
    p2 = L.project_l1(v2, 1.0)
    assert np.allclose(p2, [0.5, 0.5])


# ---------------------------------------------------------------------------
# Brute-force oracle.
# ---------------------------------------------------------------------------

def test_brute_force_matches_lp():
    rng = np.random.default_rng(5)
    hinge = L.make_loss("hinge")
    for _ in range(15):
        n = int(rng.integers(2, 6))
        atoms = [(float(rng.uniform(-1, 1)), int(rng.choice([-1, 1])),
                  float(rng.uniform(0.1, 1))) for _ in range(n)]
        C = float(rng.uniform(0.5, 3.0))
        bf = L.brute_force_1d(atoms, hinge, C)
        lp = hinge_lp_oracle(atoms, C)
        assert bf == pytest.approx(lp, abs=2e-3)


def test_brute_force_separable_example():
    hinge = L.make_loss("hinge")
    atoms = [(0.01, 1, 0.7), (-0.01, -1, 0.3)]
    assert L.brute_force_1d(atoms, hinge, 200.0) == pytest.approx(0.0, abs=1e-9)


def test_brute_force_atom_cap():
    hinge = L.make_loss("hinge")
    atoms = [(0.1 * i, 1, 1.0) for i in range(11)]
    with pytest.raises(L.LossError):
        L.brute_force_1d(atoms, hinge, 1.0)


# ---------------------------------------------------------------------------
# Kernel program.
# ---------------------------------------------------------------------------

def test_kernel_program_matches_lp_oracle():
    rng = np.random.default_rng(7)
    hinge = L.make_loss("hinge")
    lin = kernels.standard_kernel("linear")
    opts = L.SolverOptions(max_iters=600, n_restarts=14)
    for _ in range(6):
        n = int(rng.integers(2, 6))
        atoms = [(float(rng.uniform(-1, 1)), int(rng.choice([-1, 1])),
                  float(rng.uniform(0.1, 1))) for _ in range(n)]
        C = float(rng.uniform(0.5, 3.0))
        model = L.train_kernel_program(lift(atoms), lin, hinge, C, opts)
        lp = hinge_lp_oracle(atoms, C, bias_half=opts.bias_box)
        assert model.objective <= lp + 1e-3
        assert model.objective >= lp - 1e-9  # solver cannot beat the optimum


def test_norm_constraint_respected():
    rng = np.random.default_rng(8)
    hinge = L.make_loss("hinge")
    k = kernels.standard_kernel("rbf", sigma=1.0)
    X = rng.standard_normal((20, 5))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = np.sign(rng.standard_normal(20))
    model = L.train_kernel_program((X, y), k, hinge, 0.5,
                                   L.SolverOptions(max_iters=100, n_restarts=3))
    assert model.norm <= 0.5 * (1 + 1e-9)


def test_labeled_point_input_and_json():
    pts = [LabeledPoint(np.array([1.0, 0, 0]), 1),
           LabeledPoint(np.array([-1.0, 0, 0]), -1)]
    lin = kernels.standard_kernel("linear")
    model = L.train_kernel_program(pts, lin, L.make_loss("hinge"), 2.0,
                                   L.SolverOptions(max_iters=100, n_restarts=4))
    assert model.objective == pytest.approx(0.0, abs=1e-3)
    doc = model.to_json()
    assert '"C": 2.0' in doc


def test_strict_nonconvergence_raises_with_partial_model():
    lin = kernels.standard_kernel("linear")
    opts = L.SolverOptions(max_iters=3, n_restarts=1, eps_opt=1e-9, strict=True)
    X = np.array([[0.5, 0.0], [-0.5, 0.0]])
    y = np.array([1.0, -1.0])
    with pytest.raises(L.NonConvergenceError) as err:
        L.train_kernel_program((X, y), lin, L.make_loss("hinge"), 1.0, opts)
    assert err.value.model is not None


# ---------------------------------------------------------------------------
# Finite-dimensional program.
# ---------------------------------------------------------------------------

def test_finite_program_l2_matches_kernel_linear():
    atoms = [(0.3, 1, 0.5), (-0.2, -1, 0.3), (0.05, -1, 0.2)]
    hinge = L.make_loss("hinge")
    C = 2.0
    opts = L.SolverOptions(max_iters=600, n_restarts=12)
    m_fin = L.train_finite_program(
        lift(atoms), lambda X: np.atleast_2d(X), L.L2Ball(C), hinge, opts)
    lp = hinge_lp_oracle(atoms, C, bias_half=opts.bias_box)
    assert m_fin.objective == pytest.approx(lp, abs=2e-3)


def test_finite_program_l1_constraint():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((30, 4))
    y = np.sign(X[:, 0] + 0.1 * rng.standard_normal(30))
    model = L.train_finite_program(
        (X, y), lambda Z: np.atleast_2d(Z), L.L1Ball(1.0),
        L.make_loss("hinge"), L.SolverOptions(max_iters=300, n_restarts=6))
    assert np.abs(model.w).sum() <= 1.0 + 1e-9
    # the informative coordinate dominates
    assert abs(model.w[0]) > 0.5


# ---------------------------------------------------------------------------
# Evaluation.
# ---------------------------------------------------------------------------

def test_evaluate_conventions():
    lin = kernels.standard_kernel("linear")
    X = np.array([[0.01, 0.0], [-0.01, 0.0], [0.0, 1.0]])
    y = np.array([1.0, -1.0, 1.0])
    model = L.KernelModel(
        support=np.array([[1.0, 0.0]]), alpha=np.array([1.0]), b=0.0,
        C=1.0, kernel=lin, loss=L.make_loss("hinge"),
    )
    # scores: 0.01, -0.01, 0 -> margins 0.01, 0.01, 0
    err01, err_margin, err_surr = L.evaluate(model, (X, y), gamma=0.01)
    assert err01 == pytest.approx(1 / 3)     # zero margin counts as error
    assert err_margin == pytest.approx(1 / 3)  # strict: 0.01 not inside
    err01b, err_marginb, _ = L.evaluate(model, (X, y), gamma=0.01,
                                        boundary_counts=True)
    assert err_marginb == pytest.approx(1.0)
    assert err_surr == pytest.approx((0.99 + 0.99 + 1.0) / 3)
    with pytest.raises(L.LossError):
        L.evaluate(model, (np.zeros((0, 2)), np.zeros(0)), 0.01)
