"""Bandit policies sharing one slot-in / arm-out interface."""
from ._common import Hook, ModelMismatchError, Policy, PolicyBase, SlotEvent
from .asr import EXPLOIT, TIE_BREAKS, exploration_thresholds, AsrArmState, AsrConfig, AsrPolicy, Explore, Mode, d_hat, select_epoch
from .baselines import DseePolicy, OraclePolicy, RandomPolicy, RcaPolicy, dsee_rate

__all__ = [
    "Hook",
    "ModelMismatchError",
    "Policy",
    "PolicyBase",
    "SlotEvent",
    "EXPLOIT",
    "TIE_BREAKS",
    "exploration_thresholds",
    "AsrArmState",
    "AsrConfig",
    "AsrPolicy",
    "Explore",
    "Mode",
    "d_hat",
    "select_epoch",
    "DseePolicy",
    "OraclePolicy",
    "RandomPolicy",
    "RcaPolicy",
    "dsee_rate",
]
