import numpy as np
import pytest
from scipy.optimize import minimize

from ates_mpc import Qp, solve_qp
from ates_mpc.errors import ParameterError


def test_active_bound():
    qp = Qp(H=np.array([[1.0]]), g=np.zeros(1),
            G=np.array([[-1.0]]), h=np.array([-1.0]))  # z >= 1
    res = solve_qp(qp)
    assert res.status == "optimal"
    assert res.z_star[0] == pytest.approx(1.0, abs=1e-9)
    assert res.value == pytest.approx(0.5, abs=1e-9)
    assert res.kkt_residual <= 1e-8


def test_unconstrained_stationarity():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((3, 3))
    H = M @ M.T + np.eye(3)
    g = rng.standard_normal(3)
    qp = Qp(H=H, g=g, G=np.zeros((0, 3)), h=np.zeros(0))
    res = solve_qp(qp)
    assert np.allclose(res.z_star, np.linalg.solve(H, -g), atol=1e-9)


def test_infeasible_returns_status():
    qp = Qp(H=np.eye(1), g=np.zeros(1),
            G=np.array([[1.0], [-1.0]]), h=np.array([-1.0, -1.0]))  # z <= -1, z >= 1
    res = solve_qp(qp)
    assert res.status == "infeasible"
    assert res.value == np.inf


def test_asymmetric_hessian_rejected():
    with pytest.raises(ParameterError):
        Qp(H=np.array([[1.0, 2.0], [0.0, 1.0]]), g=np.zeros(2),
           G=np.zeros((0, 2)), h=np.zeros(0))


def test_determinism():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((3, 3))
    H = M @ M.T + 0.5 * np.eye(3)
    g = rng.standard_normal(3)
    G = rng.standard_normal((10, 3))
    h = G @ rng.standard_normal(3) + rng.uniform(0.1, 1.0, 10)
    qp = Qp(H=H, g=g, G=G, h=h)
    a = solve_qp(qp)
    b = solve_qp(qp)
    assert np.array_equal(a.z_star, b.z_star)
    assert a.value == b.value
    assert a.active_set == b.active_set


def random_box_qp(rng, m, p_extra):
    M = rng.standard_normal((m, m))
    H = M @ M.T + 0.2 * np.eye(m)
    g = rng.standard_normal(m)
    box = 1.0
    G = np.vstack([np.eye(m), -np.eye(m),
                   rng.standard_normal((p_extra, m))])
    interior = rng.uniform(-0.3, 0.3, m)
    h = np.concatenate([np.full(2 * m, box),
                        G[2 * m:] @ interior + rng.uniform(0.05, 1.0, p_extra)])
    return Qp(H=H, g=g, G=G, h=h), box


def grid_oracle(qp, box, m, rounds=5, pts=13):
    """Hierarchical grid search plus an independent SLSQP polish."""
    center = np.zeros(m)
    half = box
    best = None
    for _ in range(rounds):
        axes = [np.linspace(center[i] - half, center[i] + half, pts)
                for i in range(m)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
        feas = np.all(mesh @ qp.G.T <= qp.h + 1e-9, axis=1)
        if not feas.any():
            return None
        z = mesh[feas]
        vals = 0.5 * np.einsum("ij,jk,ik->i", z, qp.H, z) + z @ qp.g
        j = int(np.argmin(vals))
        best = (float(vals[j]), z[j])
        center = z[j]
        half = half * 2.0 / (pts - 1)

    res = minimize(
        lambda z: 0.5 * z @ qp.H @ z + qp.g @ z, best[1], jac=lambda z: qp.H @ z + qp.g,
        constraints=[{"type": "ineq", "fun": lambda z: qp.h - qp.G @ z,
                      "jac": lambda z: -qp.G}],
        method="SLSQP", options={"maxiter": 200, "ftol": 1e-12})
    if res.success and np.all(qp.G @ res.x <= qp.h + 1e-7):
        val = 0.5 * res.x @ qp.H @ res.x + qp.g @ res.x
        if val < best[0]:
            best = (float(val), res.x)
    return best


def test_random_qps_against_grid_oracle():
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(60):
        m = int(rng.integers(1, 4))
        qp, box = random_box_qp(rng, m, int(rng.integers(0, 8)))
        res = solve_qp(qp)
        oracle = grid_oracle(qp, box, m)
        if res.status != "optimal" or oracle is None:
            continue
        oracle_val, oracle_z = oracle
        assert res.kkt_residual <= 1e-8
        assert np.all(qp.G @ res.z_star <= qp.h + 1e-9)
        # Solver never loses to any feasible oracle point; grid refinement
        # brings the oracle within 1e-4 of the true optimum.
        assert res.value <= oracle_val + 1e-6
        assert abs(res.value - oracle_val) <= 1e-4 * max(1.0, abs(oracle_val))
        checked += 1
    assert checked >= 40
