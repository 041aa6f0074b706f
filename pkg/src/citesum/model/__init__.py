from .inputs import Batch, ComposedInput, Instance, ModelConfig, collate, compose_inputs, wrap_target
from .network import (
    CiteSumModel,
    DecoderState,
    EncodedFeatures,
    aggregate,
    corpus_nll,
    decode_step,
    encode_pairs,
    generate,
    loss,
    nll,
)
from .training import (
    TrainConfig,
    TrainResult,
    load_checkpoint,
    make_instances,
    save_checkpoint,
    train,
)
