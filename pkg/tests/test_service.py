import numpy as np
import pytest
from pydantic import ValidationError

from deepteam.dao.session_maker import OutputSessionManager
from deepteam.dss.solver import value_iteration_dss
from deepteam.exceptions import ModelValidationError
from deepteam.kernel.transition import lattices_for
from deepteam.model.utils import validate_model
from deepteam.service.dao import ConvergenceDAO, OptionDAO, ServiceTrajectoryDAO
from deepteam.service.figures import policy_cells, reproduce_figures, resolve_levels
from deepteam.service.model import SERVER, USERS, build_service_model, user_rows
from deepteam.service.schemas import ServiceParams
from deepteam.statespace.laws import LawSpace


@pytest.fixture
def small_params() -> ServiceParams:
    return ServiceParams(n=4)


def test_params_validation():
    with pytest.raises(ValidationError):
        ServiceParams(q=[0.1, 0.2])
    with pytest.raises(ValidationError):
        ServiceParams(init_capacity=0.35)
    with pytest.raises(ValidationError):
        ServiceParams(init_users=[0.5, 0.6])
    with pytest.raises(ValidationError):
        ServiceParams(speed=1.0)
    assert ServiceParams().with_n(10).n == 10


def test_request_probability():
    rows = user_rows(ServiceParams())
    # вариант со скидкой: (1 - 0.85) * 0.8
    assert rows[0][1][1] == pytest.approx(0.12)
    assert rows[1][2] == [0.2, 0.8]


def test_model_shape(small_params):
    model = build_service_model(small_params)
    users, server = model.subpop_index(USERS), model.subpop_index(SERVER)
    assert model.subpops[server].major
    assert model.is_decoupled
    assert model.beta == 0.8
    assert LawSpace(model).size == 3 ** 2 * 6
    lattices = lattices_for(model)
    assert lattices[users].size == small_params.n + 1
    assert lattices[server].size == 6
    assert validate_model(model, probe_count=4).valid


def test_server_dynamics(small_params):
    model = build_service_model(small_params)
    sp = model.subpops[model.subpop_index(SERVER)]
    for x in range(sp.m):
        for u in range(sp.a):
            assert sp.dynamics.next_state(1, x, u, None, 0) == u
            assert sp.dynamics.next_state(1, x, u, None, 1) == x


def test_outsourced_base_price(small_params):
    model = build_service_model(small_params)
    dist = (np.array([[0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]), np.zeros((6, 6)))
    users = model.subpop_index(USERS)
    # 0.3 * (1 + 1 - 0.5)
    assert model.cost.per_agent[users].value(1, 0, 2, dist) == pytest.approx(0.45)
    assert model.cost.per_agent[users].value(1, 0, 0, dist) == pytest.approx(0.59)


def test_resolve_levels():
    assert resolve_levels("n", 50) == 50
    assert resolve_levels("sqrt", 10) == 4
    assert resolve_levels("3", 10) == 3
    with pytest.raises(ModelValidationError):
        resolve_levels("half", 10)
    with pytest.raises(ModelValidationError):
        resolve_levels("0", 10)


def test_policy_cells(small_params):
    model = build_service_model(small_params)
    cells = policy_cells(model, value_iteration_dss(model, tol=1e-4))
    assert len(cells) == (small_params.n + 1) * 6
    assert {idle for _, _, idle, _, _ in cells} <= {1, 2, 3}
    assert {u0 for _, _, _, _, u0 in cells} <= set(small_params.capacities)


def test_reproduce_figures(tmp_path, small_params):
    manager = OutputSessionManager(tmp_path)
    with manager.create_session() as session:
        with manager.transaction(session):
            paths = reproduce_figures(session, small_params, ns=(2, 3), tol=1e-4, reps=10, steps=5)
    assert sorted(p.name for p in paths) == ["fig1a.csv", "fig1b.csv", "fig1c.csv", "fig2.csv", "fig3.csv"]
    assert all(p.exists() for p in paths)
    assert len(OptionDAO.read_rows(tmp_path / "fig1a.csv")) == 30
    trajectory = ServiceTrajectoryDAO.read_rows(tmp_path / "fig2.csv")
    assert [row.t for row in trajectory] == [1, 2, 3, 4, 5]
    assert trajectory[0].x0_t == small_params.init_capacity
    convergence = ConvergenceDAO.read_rows(tmp_path / "fig3.csv")
    assert [row.n for row in convergence] == [2, 3]
    assert all(row.gap >= 0.0 for row in convergence)
