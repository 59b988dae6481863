"""Plastic neural memory networks for sequence anomaly classification.

An external slot memory accessed through read, output, and write
controllers whose connections combine fixed trained weights with
alpha-gated Hebbian traces, plus the attention-only baseline memory, a
training/evaluation harness, and analysis tooling.
"""

from .data import LabeledSequence, SynthConfig, synth_generate
from .model import Classifier, ModelConfig
from .training import TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Classifier",
    "LabeledSequence",
    "ModelConfig",
    "SynthConfig",
    "TrainConfig",
    "evaluate",
    "synth_generate",
    "train",
    "__version__",
]
