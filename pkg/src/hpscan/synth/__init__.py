from .archetypes import (
    DEFAULT_ARCHETYPES,
    HoneypotArchetype,
    NoiseRates,
    NonHoneypotArchetype,
    SynthConfig,
    load_archetypes,
    synth_config,
)
from .generator import CorpusGenerator, generate, technique_counts, write_corpus

__all__ = [
    "DEFAULT_ARCHETYPES",
    "HoneypotArchetype",
    "NoiseRates",
    "NonHoneypotArchetype",
    "SynthConfig",
    "load_archetypes",
    "synth_config",
    "CorpusGenerator",
    "generate",
    "technique_counts",
    "write_corpus",
]
