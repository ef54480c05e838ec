import logging

import numpy as np
from pydantic import ValidationError

from dataset.prep import ScalerParams
from neuralnet.mlp import MlpModel, ModelConfig
from utils.errors import ModelError
from utils.files import read_json, write_json

logger = logging.getLogger(__name__)

FORMAT_NAME = "robotrace-mlp"


def model_to_dict(model: MlpModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "config": model.config.model_dump(),
        "class_names": list(model.class_names),
        "columns": list(model.columns),
        "scaler": model.scaler.model_dump() if model.scaler else None,
        # Row-major nested lists
        "W1": model.W1.tolist(),
        "b1": model.b1.tolist(),
        "W2": model.W2.tolist(),
        "b2": model.b2.tolist(),
    }


def model_from_dict(document: dict) -> MlpModel:
    if document.get("format") != FORMAT_NAME:
        raise ModelError(f"not a model document (format {document.get('format')!r})")
    try:
        model = MlpModel(
            config=ModelConfig.model_validate(document["config"]),
            W1=np.array(document["W1"], dtype=np.float64).reshape(-1, len(document["columns"])),
            b1=np.array(document["b1"], dtype=np.float64),
            W2=np.array(document["W2"], dtype=np.float64).reshape(len(document["class_names"]), -1),
            b2=np.array(document["b2"], dtype=np.float64),
            class_names=list(document["class_names"]),
            columns=list(document["columns"]),
            scaler=ScalerParams.model_validate(document["scaler"]) if document.get("scaler") else None,
        )
    except KeyError as e:
        raise ModelError(f"model document is missing {e}")
    except (ValidationError, ValueError) as e:
        raise ModelError(f"model document is malformed: {e}")
    model.check()
    return model


def save_model(model: MlpModel, path) -> int:
    written = write_json(path, model_to_dict(model))
    logger.info(f"Saved model to {path}")
    return written


def load_model(path) -> MlpModel:
    document = read_json(path)
    if not isinstance(document, dict):
        raise ModelError(f"{path}: expected a JSON object")
    return model_from_dict(document)
