from .datasets import (
    apply_trigger,
    inject_backdoor,
    load_csv,
    load_idx,
    save_idx,
    synth_bars8x8,
    synth_blobs,
    synth_dataset,
    synth_moons,
)
from .experiment import (
    ALL_STAGES,
    build_attack,
    build_defence,
    build_model,
    roc_auc,
    run_experiment,
)

__all__ = [
    "apply_trigger",
    "inject_backdoor",
    "load_csv",
    "load_idx",
    "save_idx",
    "synth_bars8x8",
    "synth_blobs",
    "synth_dataset",
    "synth_moons",
    "ALL_STAGES",
    "build_attack",
    "build_defence",
    "build_model",
    "roc_auc",
    "run_experiment",
]
