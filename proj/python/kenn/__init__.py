"""Knowledge enhanced neural networks: a relational knowledge layer over a base MLP."""

from ._kenn import (
    ConfigError,
    DataError,
    Error,
    Graph,
    Knowledge,
    Model,
    NumericError,
    ParseError,
    ShapeError,
    __version__,
    accuracy,
    boost_hard,
    boost_soft,
    grounding_count,
    homophily_knowledge,
    ke_forward,
    load_graph,
    load_model,
    normalize_config,
    parse_knowledge,
    rke_forward,
    run_cli,
    run_experiment,
    synthetic_graph,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "Graph",
    "Knowledge",
    "Model",
    "NumericError",
    "ParseError",
    "ShapeError",
    "__version__",
    "accuracy",
    "boost_hard",
    "boost_soft",
    "grounding_count",
    "homophily_knowledge",
    "ke_forward",
    "load_graph",
    "load_model",
    "normalize_config",
    "parse_knowledge",
    "rke_forward",
    "run_cli",
    "run_experiment",
    "synthetic_graph",
    "train",
]
