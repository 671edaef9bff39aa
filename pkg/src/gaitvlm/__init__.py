"""Desk-scale vision-language pipeline for pathological gait classification.

The package combines three modalities: gait videos (frozen vision transformer
with a learnable visual prompt module), class descriptions (knowledge-aware
learnable text prompts over a frozen text encoder), and numerical gait
parameters (value-scaled embeddings orthogonal to the positional encoding).
A transformer decoder translates learned class features back into
gait-parameter sentences.
"""

__version__ = "0.1.0"

from gaitvlm.params import (
    Combination,
    NormalizationStats,
    NumericSentence,
    ParameterDescriptor,
    ParameterRecord,
    Schema,
    enumerate_combinations,
    fit_normalization,
    load_corpus,
    normalize,
    pearson,
    render_sentence,
)
from gaitvlm.tokenizer import SimpleTokenizer, TokenizerSpec

__all__ = [
    "Combination",
    "NormalizationStats",
    "NumericSentence",
    "ParameterDescriptor",
    "ParameterRecord",
    "Schema",
    "SimpleTokenizer",
    "TokenizerSpec",
    "enumerate_combinations",
    "fit_normalization",
    "load_corpus",
    "normalize",
    "pearson",
    "render_sentence",
    "__version__",
]
