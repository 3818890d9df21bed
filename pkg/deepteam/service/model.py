import math

from loguru import logger

from deepteam.model.dao import ModelDAO
from deepteam.model.models import RawAgentModel, RawSubPop, TeamModel
from deepteam.model.schemas import (AgentCostSchema, CostSchema, HorizonSchema, KernelSchema, ModelSchema,
                                    SubPopSchema)
from deepteam.service.schemas import ServiceParams

USERS = "users"
SERVER = "server"
OPTIONS = ("1", "2", "3")


def capacity_symbol(value: float) -> str:
    return format(value, "g")


def user_rows(params: ServiceParams) -> list[list[list[float]]]:
    """table[x][u][y]: без запроса - запрос с вероятностью (1 - alpha(u)) mu, с запросом - обслуживание с q(u)."""
    idle = [[1.0 - (1.0 - a) * params.mu, (1.0 - a) * params.mu] for a in params.alpha]
    busy = [[q, 1.0 - q] for q in params.q]
    return [idle, busy]


def _requests() -> str:
    return f'Z("{USERS}", "1")'


def _capacity(params: ServiceParams) -> str:
    terms = [f'{v!r} * Z("{SERVER}", "{capacity_symbol(v)}")' for v in params.capacities]
    return "(" + " + ".join(terms) + ")"


def user_cost_exprs(params: ServiceParams) -> list[list[str]]:
    """c(x, u, d): базовая цена c_B(u, 1 - d) без запроса, цена обслуживания c_S(u, d) с запросом."""
    d = _requests()
    markup = 1.0 + params.discount_markup
    base = [repr(params.base_price), repr(markup * params.base_price),
            f"{params.outsource_base!r} * (1 + 1 - {d})"]
    service = [repr(params.service_price), repr(markup * params.service_price),
               f"{params.outsource_service!r} * (1 + {d})"]
    return [base, service]


def server_cost_table(params: ServiceParams) -> list[list[float]]:
    """ell(x0, u0) = ell_C(x0) + ell_P |u0 - x0|."""
    return [[price + params.patch_price * abs(u - x) for u in params.capacities]
            for x, price in zip(params.capacities, params.capacity_prices)]


def service_schema(params: ServiceParams) -> ModelSchema:
    """Файловое представление модели: ядро пользователей - таблица, сервер - динамика с отказами."""
    symbols = [capacity_symbol(v) for v in params.capacities]
    # w = "1" - отказ: мощность не меняется; w = "0" - устанавливается u0
    dynamics = [[[symbols[u], symbols[x]] for u in range(len(symbols))] for x in range(len(symbols))]
    gap = f"({_requests()} - {_capacity(params)})"
    return ModelSchema(
        subpops=[
            SubPopSchema(name=USERS, size=params.n, states=["0", "1"], actions=list(OPTIONS),
                         init_pmf=list(params.init_users), kernel=KernelSchema(mode="table", table=user_rows(params))),
            SubPopSchema(name=SERVER, size=1, states=symbols, actions=symbols, noises=["0", "1"],
                         noise_pmf=[1.0 - params.fault_prob, params.fault_prob],
                         init_states=[capacity_symbol(params.init_capacity)],
                         kernel=KernelSchema(mode="table", dynamics=dynamics)),
        ],
        cost=CostSchema(
            mode="per_agent",
            per_agent={USERS: AgentCostSchema(expr=user_cost_exprs(params)),
                       SERVER: AgentCostSchema(table=server_cost_table(params))},
            joint=f"{params.penalty!r} * {gap} * {gap}",
        ),
        horizon=HorizonSchema(beta=params.beta),
    )


def build_service_model(params: ServiceParams | None = None) -> TeamModel:
    params = params or ServiceParams()
    logger.info(f"Модель обслуживания: n={params.n}, beta={params.beta}")
    return ModelDAO.from_schema(service_schema(params))


def service_raw_model(params: ServiceParams, n: int = 3, levels: int = 4) -> RawAgentModel:
    """
    Модель пользователей на уровне агентов: шум агента - уровень квантиля w из levels,
    следующее состояние 1, если (w + 1/2)/levels < P(1 | x, u).
    """
    rows = user_rows(params)
    costs = [[params.base_price, (1.0 + params.discount_markup) * params.base_price, None],
             [params.service_price, (1.0 + params.discount_markup) * params.service_price, None]]

    def dynamics(t, x, u, w):
        return tuple(int((wi + 0.5) / levels < rows[xi][ui][1]) for xi, ui, wi in zip(x, u, w))

    def cost(t, x, u):
        d = sum(x) / len(x)
        prices = []
        for xi, ui in zip(x, u):
            if ui == 2:
                prices.append(params.outsource_service * (1 + d) if xi else params.outsource_base * (2 - d))
            else:
                prices.append(costs[xi][ui])
        # fsum не зависит от порядка агентов
        return math.fsum(prices) / len(x)

    partition = (RawSubPop(name=USERS, size=n, states=("0", "1"), actions=OPTIONS,
                           noises=tuple(str(w) for w in range(levels))),)
    return RawAgentModel(partition=partition, dynamics=dynamics, cost=cost, n_agents=n)
