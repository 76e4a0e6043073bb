"""Training-free through-the-wall radar activity recognition.

Echo synthesis, range/Doppler-time maps, corner-seeded four-phase Chan-Vese
signature extraction and Mapper-based template matching.
"""

__version__ = "0.1.0"

from .config import PipelineConfig, preset
from .estimators import EchoToMap, SignatureExtractor, TopologicalTemplateClassifier

__all__ = [
    "__version__",
    "PipelineConfig",
    "preset",
    "EchoToMap",
    "SignatureExtractor",
    "TopologicalTemplateClassifier",
]
