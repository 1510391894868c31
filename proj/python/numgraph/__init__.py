"""Question-directed graph reasoning over text: python surface.

Structured results cross the C++ boundary as JSON; these wrappers decode them
into plain dicts.
"""

import json

from numgraph._core import (
    default_config_json,
    gen_synthetic,
    normalize_tokens,
    score_answer,
    tokenize,
)
from numgraph import _core

__all__ = [
    "annotate",
    "build_graph",
    "default_config",
    "evaluate",
    "gen_synthetic",
    "normalize_tokens",
    "score_answer",
    "tokenize",
    "train",
]


def annotate(question, passage):
    return json.loads(_core.annotate_json(question, passage))


def build_graph(question, passage, mode="full"):
    return json.loads(_core.graph_json(question, passage, mode))


def default_config():
    return json.loads(default_config_json())


def train(config, data_path, out_prefix="model"):
    if isinstance(config, dict):
        config = json.dumps(config)
    return json.loads(_core.train_json(config, data_path, out_prefix))


def evaluate(ckpt_path, data_path):
    return json.loads(_core.evaluate_json(ckpt_path, data_path))
