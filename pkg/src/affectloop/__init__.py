"""affectloop: a closed-loop affective game adaptation framework.

Physiological signals are classified into an arousal/valence emotional state,
mapped to gameplay directives, and applied to a deterministic procedural
survival-horror simulation; an offline triangulation engine pairs the logged
game events with the emotional responses visible in the recorded trace.
"""

from .core import AvTrace, EmotionalState, PhysiologicalSample

__version__ = "0.1.0"

__all__ = ["AvTrace", "EmotionalState", "PhysiologicalSample", "__version__"]
