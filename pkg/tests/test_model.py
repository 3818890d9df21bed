import numpy as np
import pytest

from deepteam.exceptions import ModelValidationError
from deepteam.model.dao import ModelDAO
from deepteam.model.exchangeability import check_partial_exchangeability, reduce_raw_model
from deepteam.model.models import Horizon, RawAgentModel, RawSubPop
from deepteam.model.utils import cost_eval, grid_distributions, kernel_eval, space_report, validate_model
from deepteam.service.model import service_raw_model
from deepteam.service.schemas import ServiceParams
from tests.conftest import build, coupled_schema, functional_schema


def test_build_functional_model(functional_model):
    sp = functional_model.subpops[0]
    assert functional_model.K == 1
    assert functional_model.T == 2
    assert (sp.m, sp.a, len(sp.noises)) == (2, 2, 2)
    assert functional_model.is_decoupled
    assert functional_model.has_dynamics


def test_expression_kernel_reads_distribution(coupled_model):
    assert not coupled_model.is_decoupled
    dist = (np.array([[0.0, 0.0], [0.0, 1.0]]),)
    # p = 0.2 + 0.5 * 1 при x=0, u=0
    assert kernel_eval(coupled_model, "c", 1, "1", "0", "0", dist) == pytest.approx(0.7)
    assert kernel_eval(coupled_model, "c", 1, "1", "0", "1", dist) == pytest.approx(0.3)


def test_functional_kernel_row(functional_model):
    dist = (np.full((2, 2), 0.25),)
    assert kernel_eval(functional_model, "a", 1, "1", "0", "1", dist) == pytest.approx(0.7)
    assert kernel_eval(functional_model, "a", 1, "0", "0", "1", dist) == pytest.approx(0.3)
    assert kernel_eval(functional_model, "a", 1, "1", "1", "1", dist) == pytest.approx(1.0)


def test_unknown_symbol_in_dynamics():
    schema = functional_schema()
    schema["subpops"][0]["kernel"]["dynamics"][0][0][0] = "7"
    with pytest.raises(ModelValidationError, match="symbol '7'"):
        build(schema)


def test_duplicate_state_symbol():
    schema = functional_schema()
    schema["subpops"][0]["states"] = ["0", "0"]
    with pytest.raises(ModelValidationError, match="duplicate"):
        build(schema)


@pytest.mark.parametrize("source", ["__import__('os')", "Z('a', '9')", "x + 1", "Q('a', '1')"])
def test_rejected_expressions(source):
    schema = functional_schema()
    schema["cost"]["joint"] = source
    with pytest.raises(ModelValidationError):
        build(schema)


def test_parse_reports_schema_path():
    with pytest.raises(ModelValidationError, match="schema"):
        ModelDAO.parse('{"subpops": [], "cost": {"mode": "joint", "joint": "1"}, "horizon": {"T": 1}}')


def test_load_missing_file(tmp_path):
    with pytest.raises(ModelValidationError, match="cannot read"):
        ModelDAO.load(tmp_path / "absent.json")


def test_validate_model_clean(functional_model, coupled_model):
    assert validate_model(functional_model).valid
    report = validate_model(coupled_model, probe_count=8, seed=3)
    assert report.valid
    assert report.probes >= 8


def test_validate_model_reports_bad_rows():
    schema = coupled_schema()
    schema["subpops"][0]["kernel"] = {"mode": "table", "table": [[[0.5, 0.4], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]]}
    report = validate_model(build(schema), probe_count=2)
    assert not report.valid
    assert any("row sum" in v for v in report.violations)


def test_negative_cost_is_an_error():
    schema = functional_schema()
    schema["cost"] = {"mode": "joint", "joint": '-1 - Z("a", "1")'}
    model = build(schema)
    with pytest.raises(ModelValidationError, match="cost at t=1"):
        cost_eval(model, 1, (np.full((2, 2), 0.25),))
    assert not validate_model(model, probe_count=2).valid


def test_space_report(functional_model):
    report = space_report(functional_model, r=4)
    assert report["deep_states"] == 3
    assert report["deep_state_bound"] == 9
    assert report["local_laws"] == 4
    assert report["dp_pairs_per_step"] == 12
    assert report["grid_full"] == 25


def test_service_raw_model_is_exchangeable():
    result = check_partial_exchangeability(service_raw_model(ServiceParams(), n=3), exhaustive=True)
    assert result.passed
    assert result.checked > 0


def test_index_dependent_model_fails_exchangeability():
    raw = RawAgentModel(
        partition=(RawSubPop(name="a", size=2, states=("0", "1"), actions=("0",), noises=("0",)),),
        dynamics=lambda t, x, u, w: (1, x[1]),
        cost=lambda t, x, u: float(sum(x)),
    )
    result = check_partial_exchangeability(raw, exhaustive=True)
    assert not result.passed
    assert result.counterexample["kind"] == "dynamics"


def test_reduce_raw_model_matches_agent_dynamics():
    params = ServiceParams()
    raw = service_raw_model(params, n=3, levels=4)
    model = reduce_raw_model(raw, noise_pmfs=[[0.25] * 4], init_pmfs=[params.init_users], horizon=Horizon(T=2))
    sp = model.subpops[0]
    dist = (np.array([[2 / 3, 0.0, 0.0], [1 / 3, 0.0, 0.0]]),)
    # P(1 | x=0, вариант 2) = 0.12 меньше первого квантиля 0.125
    assert sp.kernel.row(1, 0, 1, dist).tolist() == [1.0, 0.0]
    # P(1 | x=1, вариант 1) = 0.9: все четыре квантиля ниже
    assert sp.kernel.row(1, 1, 0, dist).tolist() == [0.0, 1.0]
    idle = (np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),)
    assert model.cost.evaluate(1, idle) == pytest.approx(params.base_price)


def test_validate_model_checks_every_step():
    # сумма строки равна 1.1 только при t=2
    schema = coupled_schema(T=3)
    schema["subpops"][0]["kernel"]["expr"][0][0] = ["0.5 + 0.1 * (t - 1) * (3 - t)", "0.5"]
    report = validate_model(build(schema), probe_count=2)
    assert not report.valid
    assert report.violations
    assert all("t=2" in v and "row sum" in v for v in report.violations)


def test_grid_vertices(functional_model):
    vertices, notes = grid_distributions(functional_model, r=2)
    assert len(vertices) == 3 ** 4
    assert notes == []
    blocks = {tuple(d[0].ravel()) for d in vertices}
    assert (0.0, 0.0, 0.0, 0.0) in blocks and (1.0, 0.5, 0.0, 1.0) in blocks
    reduced, notes = grid_distributions(functional_model, r=2, limit=9)
    assert len(reduced) == 9 * 2
    assert len(notes) == 2
    assert "one action column" in notes[1]
    assert validate_model(functional_model, probe_count=0).notes == []
