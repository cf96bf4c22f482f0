try:
    from ._ecpe import (
        ConfigError,
        ContractError,
        ParseError,
        TrainedModel,
        TripleStore,
        build_candidates,
        gradcheck,
        load_corpus,
        pad_distance,
        synth_corpus,
        textrank,
        train,
    )
except ImportError:
    from _ecpe import (
        ConfigError,
        ContractError,
        ParseError,
        TrainedModel,
        TripleStore,
        build_candidates,
        gradcheck,
        load_corpus,
        pad_distance,
        synth_corpus,
        textrank,
        train,
    )

__all__ = [
    "ConfigError",
    "ContractError",
    "ParseError",
    "TrainedModel",
    "TripleStore",
    "build_candidates",
    "gradcheck",
    "load_corpus",
    "pad_distance",
    "synth_corpus",
    "textrank",
    "train",
]
