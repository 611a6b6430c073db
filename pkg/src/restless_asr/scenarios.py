"""Scenario presets and custom scenario loading."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .markov import ArmSpec, ValidationError, dump_arms, load_arms, two_state_arm

__all__ = ["Scenario", "PRESETS", "load_scenario", "metropolis_chain", "random_reversible_arms"]


@dataclass(frozen=True)
class Scenario:
    name: str
    arms: tuple[ArmSpec, ...]
    description: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "arms": dump_arms(self.arms)}


def _gilbert_elliot(name: str, p01, p10, description: str) -> Scenario:
    return Scenario(name, tuple(two_state_arm(a, b, 0.1, 1.0) for a, b in zip(p01, p10)), description)


def metropolis_chain(pi: np.ndarray) -> np.ndarray:
    """Lazy Metropolis birth-death chain on ``0..n-1`` with target ``pi``.

    Proposes ``x +/- 1`` with probability 1/2 each (off-range proposals are
    rejected) and accepts with ``min(1, pi[y] / pi[x])``; reversible w.r.t.
    ``pi`` by construction.
    """
    n = pi.size
    P = np.zeros((n, n))
    for x in range(n):
        for y in (x - 1, x + 1):
            if 0 <= y < n:
                P[x, y] = 0.5 * min(1.0, pi[y] / pi[x])
        P[x, x] = 1.0 - P[x].sum()
    return P


def random_reversible_arms(n_arms: int, n_states: int, seed: int) -> list[ArmSpec]:
    """Arms with rewards ``k / n_states`` (``k = 1..n_states``) and
    Dirichlet(2)-distributed stationary vectors, via :func:`metropolis_chain`."""
    rng = np.random.default_rng(seed)
    rewards = np.arange(1, n_states + 1) / n_states
    arms = []
    for _ in range(n_arms):
        pi = rng.dirichlet(np.full(n_states, 2.0))
        arms.append(ArmSpec(rewards, metropolis_chain(pi)))
    return arms


def _fig_20state() -> Scenario:
    return Scenario(
        "fig_20state",
        tuple(random_reversible_arms(5, 20, seed=20)),
        "5 arms, 20 states; reconstruction (random reversible Metropolis chains, seed 20), "
        "not the original matrices",
    )


PRESETS = {
    "fig_5arm": lambda: _gilbert_elliot(
        "fig_5arm", [0.1, 0.1, 0.5, 0.1, 0.1], [0.2, 0.3, 0.1, 0.4, 0.5],
        "5 two-state arms, rewards 1/0.1",
    ),
    "fig_10arm": lambda: _gilbert_elliot(
        "fig_10arm",
        [0.1, 0.1, 0.5, 0.1, 0.1, 0.2, 0.1, 0.2, 0.15, 0.25],
        [0.2, 0.3, 0.1, 0.4, 0.5, 0.45, 0.35, 0.3, 0.5, 0.4],
        "10 two-state arms, rewards 1/0.1",
    ),
    "fig_closegap": lambda: _gilbert_elliot(
        "fig_closegap", [0.1, 0.8, 0.5, 0.1, 0.1], [0.2, 0.2, 0.1, 0.4, 0.5],
        "5 two-state arms, top two means 0.03 apart",
    ),
    "fig_20state": _fig_20state,
    "fig_bursty": lambda: _gilbert_elliot(
        "fig_bursty", [0.04, 0.05, 0.36, 0.05, 0.06], [0.08, 0.15, 0.09, 0.05, 0.18],
        "5 two-state bursty arms (small switching probabilities)",
    ),
}


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Preset by name, or a JSON file: ``{"name", "description", "arms": [...]}``
    or a bare list of arm objects."""
    key = str(name_or_path)
    if key in PRESETS:
        return PRESETS[key]()
    path = Path(key)
    if not path.exists():
        raise ValidationError(f"unknown scenario {key!r}; presets: {', '.join(PRESETS)}")
    import json

    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from None
    arms = load_arms(data if isinstance(data, list) else data.get("arms", data))
    name = data.get("name", path.stem) if isinstance(data, dict) else path.stem
    desc = data.get("description", "") if isinstance(data, dict) else ""
    return Scenario(name, tuple(arms), desc)
