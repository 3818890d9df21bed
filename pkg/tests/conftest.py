from pathlib import Path

import pytest

from deepteam.model.dao import ModelDAO
from deepteam.model.models import TeamModel
from deepteam.model.schemas import ModelSchema


def functional_schema(T: int = 2, n: int = 2, noise: tuple[float, float] = (0.7, 0.3)) -> dict:
    """Одна подпопуляция с динамикой: при w="0" агент переходит в u, при w="1" остаётся в x."""
    return {
        "subpops": [{
            "name": "a", "size": n, "states": ["0", "1"], "actions": ["0", "1"],
            "noises": ["0", "1"], "noise_pmf": list(noise), "init_pmf": [0.5, 0.5],
            "kernel": {"mode": "table", "dynamics": [[["0", "0"], ["1", "0"]], [["0", "1"], ["1", "1"]]]},
        }],
        "cost": {
            "mode": "per_agent",
            "per_agent": {"a": {"table": [[0.0, 1.0], [2.0, 1.5]]}},
            "joint": 'Z("a", "1") * Z("a", "1")',
        },
        "horizon": {"T": T},
    }


def major_minor_schema(T: int = 2) -> dict:
    """Минорные агенты "a" (n=2) и основной агент "b" с табличным ядром."""
    schema = functional_schema(T=T)
    schema["subpops"].append({
        "name": "b", "size": 1, "states": ["lo", "hi"], "actions": ["lo", "hi"], "init_states": ["lo"],
        "kernel": {"mode": "table", "table": [[[0.9, 0.1], [0.1, 0.9]], [[0.9, 0.1], [0.1, 0.9]]]},
    })
    schema["cost"]["per_agent"]["b"] = {"table": [[0.0, 0.4], [0.3, 0.2]]}
    schema["cost"]["joint"] = '(Z("a", "1") - Z("b", "hi")) * (Z("a", "1") - Z("b", "hi"))'
    return schema


def coupled_schema(T: int = 2) -> dict:
    """Ядро зависит от D: вероятность перехода в "1" растёт с долей агентов в "1"."""
    p = 'clamp(0.2 + 0.5 * Z("c", "1"))'
    q = 'clamp(0.6 - 0.3 * Z("c", "1"))'
    return {
        "subpops": [{
            "name": "c", "size": 3, "states": ["0", "1"], "actions": ["0", "1"], "init_pmf": [0.6, 0.4],
            "kernel": {"mode": "expr", "expr": [[[f"1 - {p}", p], [f"1 - {q}", q]],
                                                [[f"1 - {q}", q], [f"1 - {p}", p]]]},
        }],
        "cost": {"mode": "per_agent", "per_agent": {"c": {"table": [[0.5, 0.0], [0.0, 1.0]]}},
                 "joint": 'D("c", "1", "1")'},
        "horizon": {"T": T},
    }


def constant_cost_schema(beta: float = 0.9) -> dict:
    schema = functional_schema()
    schema["cost"] = {"mode": "joint", "joint": "0.5"}
    schema["horizon"] = {"beta": beta}
    return schema


def two_coupled_schema(T: int = 2) -> dict:
    """Ядро "c" читает долю "d" в состоянии "1"; у "d" одно действие и табличное ядро."""
    schema = coupled_schema(T=T)
    p = 'clamp(0.3 + 0.4 * Z("d", "1"))'
    schema["subpops"][0]["kernel"]["expr"] = [[[f"1 - {p}", p], ["0.5", "0.5"]],
                                              [["0.1", "0.9"], ["0.6", "0.4"]]]
    schema["subpops"].append({"name": "d", "size": 2, "states": ["0", "1"], "actions": ["0"], "init_pmf": [0.5, 0.5],
                              "kernel": {"mode": "table", "table": [[[0.8, 0.2]], [[0.3, 0.7]]]}})
    return schema


def three_state_schema(T: int | None = 2, beta: float | None = None) -> dict:
    """Три состояния и одно действие; ядро не зависит от x: всегда (0.2, 0.2, 0.6)."""
    return {
        "subpops": [{
            "name": "h", "size": 3, "states": ["a", "b", "c"], "actions": ["0"], "init_pmf": [0.5, 0.25, 0.25],
            "kernel": {"mode": "table", "table": [[[0.2, 0.2, 0.6]]] * 3},
        }],
        "cost": {"mode": "per_agent", "per_agent": {"h": {"table": [[0.0], [0.0], [1.0]]}}},
        "horizon": {"T": T} if beta is None else {"beta": beta},
    }


def noise_switch_schema(n: int, T: int | None = 2, beta: float | None = None) -> dict:
    """
    Следующее состояние равно шуму; старт - все агенты в "0".
    Стоимость штрафует несовпадение доли действий "1" с долей состояний "1".
    """
    u1 = 'clamp(D("p", "0", "1") + D("p", "1", "1"))'
    z1 = 'clamp(D("p", "1", "0") + D("p", "1", "1"))'
    return {
        "subpops": [{
            "name": "p", "size": n, "states": ["0", "1"], "actions": ["0", "1"], "noises": ["0", "1"],
            "noise_pmf": [0.5, 0.5], "init_states": ["0"] * n,
            "kernel": {"mode": "table", "dynamics": [[["0", "1"], ["0", "1"]], [["0", "1"], ["0", "1"]]]},
        }],
        "cost": {"mode": "joint", "joint": f"{u1} * (1 - {z1}) + (1 - {u1}) * {z1} + 0.01 * {u1}"},
        "horizon": {"T": T} if beta is None else {"beta": beta},
    }


def build(schema: dict) -> TeamModel:
    return ModelDAO.from_schema(ModelSchema.model_validate(schema))


def write_model(path: Path, schema: dict) -> Path:
    path.write_text(ModelSchema.model_validate(schema).model_dump_json(indent=2, exclude_none=True), encoding="utf-8")
    return path


@pytest.fixture
def functional_model() -> TeamModel:
    return build(functional_schema())


@pytest.fixture
def major_minor_model() -> TeamModel:
    return build(major_minor_schema())


@pytest.fixture
def coupled_model() -> TeamModel:
    return build(coupled_schema())


@pytest.fixture
def discounted_model() -> TeamModel:
    schema = functional_schema()
    schema["horizon"] = {"beta": 0.8}
    return build(schema)


@pytest.fixture
def model_file(tmp_path: Path) -> Path:
    return write_model(tmp_path / "model.json", functional_schema())
