from .pooling import POOLINGS, pool, pool_batch
from .registry import (
    CACHE_ENV,
    PRETRAINED_ENCODERS,
    REGISTRY,
    EncoderSpec,
    HFEncoder,
    encode,
    load_encoder,
    register_encoder,
)
from .regressor import (
    EpochRecord,
    PredictionVector,
    RegressorModel,
    TrainConfig,
    TrainReport,
    load_model,
    load_report,
    predict,
    regressor_fingerprint,
    save_model,
    train_regressor,
)
from .toy import TOY_DIM, ToyEncoder

__all__ = [
    "CACHE_ENV", "PRETRAINED_ENCODERS", "POOLINGS", "REGISTRY", "TOY_DIM",
    "EncoderSpec", "EpochRecord", "HFEncoder", "PredictionVector", "RegressorModel",
    "ToyEncoder", "TrainConfig", "TrainReport",
    "encode", "load_encoder", "load_model", "load_report", "pool", "pool_batch",
    "predict", "regressor_fingerprint", "register_encoder", "save_model", "train_regressor",
]
