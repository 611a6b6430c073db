from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

from ..markov import ArmSpec


class ModelMismatchError(ValueError):
    """An observed reward is not a state of the played arm."""


@dataclass(frozen=True)
class SlotEvent:
    """Instrumentation record for one played slot.

    ``phase`` is one of ``"init"``, ``"sb1"``, ``"sb2"``, ``"exploit"``,
    ``"explore"`` (DSEE) or ``"play"`` (stateless policies).  ``epoch`` is the
    per-kind epoch counter: exploration epoch index of ``arm`` for ASR/RCA
    blocks, exploitation epoch number for exploit slots.
    """

    t: int
    phase: str
    arm: int
    reward: float
    epoch_type: str
    epoch: int


Hook = Callable[[SlotEvent], None]


class Policy(Protocol):
    name: str

    def select(self) -> int: ...

    def update(self, reward: float) -> None: ...

    def step(self, last_reward: Optional[float]) -> int: ...


class PolicyBase:
    """Slot-in / arm-out driver shared by every policy.

    Subclasses implement :meth:`_choose` (arm for the current slot) and
    :meth:`_absorb` (consume the reward of that slot, return the
    ``(phase, epoch_type, epoch)`` label for instrumentation).  :meth:`step` is the
    single-call form: feed the previous slot's reward, get the next arm.
    """

    name = "policy"

    def __init__(self, arms: Sequence[ArmSpec], hook: Optional[Hook] = None):
        self.n_arms = len(arms)
        self._lookup = [{float(r): k for k, r in enumerate(a.rewards)} for a in arms]
        self.hook = hook
        self.t = 1
        self._pending: Optional[int] = None

    def state_index(self, arm: int, reward: float) -> int:
        try:
            return self._lookup[arm][float(reward)]
        except KeyError:
            raise ModelMismatchError(f"reward {reward!r} is not a state of arm {arm}") from None

    def _choose(self) -> int:
        raise NotImplementedError

    def _absorb(self, arm: int, state: int, reward: float) -> tuple[str, str, int]:
        raise NotImplementedError

    def update(self, reward: float) -> None:
        arm = self._pending
        if arm is None:
            raise RuntimeError("update() called before select()")
        state = self.state_index(arm, reward)
        phase, kind, epoch = self._absorb(arm, state, float(reward))
        if self.hook is not None:
            self.hook(SlotEvent(self.t, phase, arm, float(reward), kind, epoch))
        self._pending = None
        self.t += 1

    def select(self) -> int:
        """Arm to play in slot ``self.t`` (idempotent until :meth:`update`)."""
        if self._pending is None:
            self._pending = self._choose()
        return self._pending

    def step(self, last_reward: Optional[float]) -> int:
        if self._pending is not None:
            if last_reward is None:
                raise RuntimeError("previous slot's reward is missing")
            self.update(last_reward)
        return self.select()
