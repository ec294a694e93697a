"""eval: held-out metrics of a stored parameter file."""

import sys
from pathlib import Path
from typing import TextIO

from pydantic import ValidationError

from app.data.dtos import SyntheticConfig
from app.data.synthetic import generate, holdout_config
from app.model.dtos import SampleBatch
from app.model.errors import ParameterFileError
from app.model.metrics import metrics
from app.model.predictor import predict_batch
from app.model.serialization import load_params


def cmd_eval(params_path: Path, seed: int | None = None, out: TextIO = sys.stdout) -> int:
    """Regenerate the held-out set from the file's metadata and report RMSE and MAE.

    Args:
        params_path: File written by train
        seed: Overrides the stored data seed before the held-out seed is derived
        out: Report stream

    Returns:
        0

    Raises:
        ParameterFileError: If the file is corrupt or lacks a data config
    """
    predictor_cfg, params, metadata = load_params(params_path)
    try:
        data_cfg = SyntheticConfig.model_validate(metadata["data"])
    except (KeyError, ValidationError) as metadata_error:
        raise ParameterFileError("Metadata lacks a valid data config", offset=0) from metadata_error
    if seed is not None:
        data_cfg = data_cfg.model_copy(update={"seed": seed})
    holdout = SampleBatch.stack(generate(holdout_config(data_cfg)))
    result = metrics(predict_batch(params, predictor_cfg, holdout), holdout.targets)
    out.write(f"samples: {holdout.size}\n")
    out.write(f"rmse: {result.rmse!r}\n")
    out.write(f"mae: {result.mae!r}\n")
    return 0
