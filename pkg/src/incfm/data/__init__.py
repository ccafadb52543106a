from .movielens import MovieLensEncoder, RatingEvent, encode_ml100k, load_movielens
from .registry import FeatureRegistry
from .synthetic import (
    ClickEvent,
    SyntheticEncoder,
    SyntheticRuleSet,
    default_rules,
    encode_synthetic,
    generate_synthetic,
)

__all__ = [
    "ClickEvent",
    "FeatureRegistry",
    "MovieLensEncoder",
    "RatingEvent",
    "SyntheticEncoder",
    "SyntheticRuleSet",
    "default_rules",
    "encode_ml100k",
    "encode_synthetic",
    "generate_synthetic",
    "load_movielens",
]
