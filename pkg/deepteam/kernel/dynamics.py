from typing import Sequence

import numpy as np

from deepteam.config import settings
from deepteam.exceptions import SolverError
from deepteam.model.models import StateActionDist, TeamModel
from deepteam.model.utils import cost_eval
from deepteam.statespace.schemas import NoiseEmpirical

Vectors = Sequence[np.ndarray]


def phi(z: Vectors, gamma: Sequence[np.ndarray], n_actions: Sequence[int]) -> StateActionDist:
    """D^k(x, u) = z^k(x) * 1{u = gamma^k(x)}."""
    out = []
    for zk, law, a in zip(z, gamma, n_actions):
        zk = np.asarray(zk, dtype=float)
        block = np.zeros((zk.size, a))
        block[np.arange(zk.size), np.asarray(law, dtype=np.int64)] = zk
        out.append(block)
    return tuple(out)


def model_phi(model: TeamModel, z: Vectors, gamma: Sequence[np.ndarray]) -> StateActionDist:
    return phi(z, gamma, [sp.a for sp in model.subpops])


def hat_f(model: TeamModel, t: int, z: Vectors, gamma: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    """Детерминированное обновление среднего поля: sum_x z(x) P(y | x, gamma(x), phi(z, gamma))."""
    dist = model_phi(model, z, gamma)
    return tuple(np.asarray(zk, dtype=float) @ sp.kernel.rows(t, law, dist)
                 for sp, zk, law in zip(model.subpops, z, gamma))


def _noise_values(noise: NoiseEmpirical | Sequence[int]) -> np.ndarray:
    counts = np.asarray(noise.counts if isinstance(noise, NoiseEmpirical) else noise, dtype=float)
    return counts / counts.sum()


def bar_f(model: TeamModel, t: int, z: Vectors, gamma: Sequence[np.ndarray],
          noise_emp: Sequence[NoiseEmpirical | Sequence[int] | None],
          subpops: Sequence[int] | None = None) -> tuple[np.ndarray | None, ...]:
    """
    f̄^k(z, gamma, w)(y) = sum_w sum_x z^k(x) 1{f^k(x, gamma^k(x), phi(z, gamma), w) = y} w(w).

    Считается для подпопуляций из subpops (по умолчанию для всех), для остальных - None.
    """
    dist = model_phi(model, z, gamma)
    chosen = range(model.K) if subpops is None else subpops
    out: list[np.ndarray | None] = [None] * model.K
    for k in chosen:
        sp = model.subpops[k]
        if sp.dynamics is None:
            raise SolverError(settings.ERROR_MESSAGES["functional"].format(k=sp.name))
        weights = _noise_values(noise_emp[k])
        if weights.size != len(sp.noises):
            raise SolverError(f"noise empirical for {sp.name} has {weights.size} entries, expected {len(sp.noises)}")
        zk = np.asarray(z[k], dtype=float)
        nxt = np.zeros(sp.m)
        for x in np.nonzero(zk)[0]:
            u = int(gamma[k][x])
            for w in np.nonzero(weights)[0]:
                nxt[sp.dynamics.next_state(t, int(x), u, dist, int(w))] += zk[x] * weights[w]
        out[k] = nxt
    return tuple(out)


def ell(model: TeamModel, t: int, z: Vectors, gamma: Sequence[np.ndarray]) -> float:
    """ell_t(z, gamma) = c_t(phi(z, gamma))."""
    return cost_eval(model, t, model_phi(model, z, gamma))
