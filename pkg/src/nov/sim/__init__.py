from .adversary import (
    BEHAVIORS,
    Behavior,
    Dropout,
    FalseAccusation,
    FlipSignUpdate,
    OversizedUpdate,
    ProjectedPoison,
    WrongGlobalShare,
    WrongShareToVictim,
    behavior_from_dict,
)
from .bus import MessageBus
from .scenario import (
    AdversarySpec,
    FilterReport,
    RoundReport,
    ScenarioConfig,
    prepare_updates,
    run_filter,
    run_scenario,
)
from .synth import l2_norm, synth_reference, synth_update, synth_updates

__all__ = [
    "BEHAVIORS",
    "AdversarySpec",
    "Behavior",
    "Dropout",
    "FalseAccusation",
    "FilterReport",
    "FlipSignUpdate",
    "MessageBus",
    "OversizedUpdate",
    "ProjectedPoison",
    "RoundReport",
    "ScenarioConfig",
    "WrongGlobalShare",
    "WrongShareToVictim",
    "behavior_from_dict",
    "l2_norm",
    "prepare_updates",
    "run_filter",
    "run_scenario",
    "synth_reference",
    "synth_update",
    "synth_updates",
]
