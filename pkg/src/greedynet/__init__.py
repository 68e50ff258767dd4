"""Greedy node-by-node pre-training for deep feedforward networks.

Hidden layers are built one node at a time: each node is a one-unit
autoencoder trained on its own slice of the data, reconstructing through
the frozen sum of its predecessors' outputs scaled by an amnesia factor.
Classical layer-by-layer pre-training (autoencoder and supervised encoder
stacks) is included for comparison, along with a shared output-layer /
fine-tuning / evaluation pipeline, operation counting, and a CLI.
"""

from .backend import active_backend, cython_available, set_backend, use_backend
from .dataset import (
    Dataset,
    NormalizeParams,
    SplitSpec,
    apply_normalization,
    load_csv,
    load_csv_pair,
    load_digits_dataset,
    normalize,
    one_hot,
    one_hot_matrix,
    split,
)
from .export import export_feature_grid, export_scatter, feature_grid, write_pgm
from .greedy import (
    GreedyConfig,
    RunningOutput,
    distribute_gcn,
    distribute_gn,
    greedy_layer,
    greedy_pretrain_stack,
    rank_by_reconstruction_error,
    train_node,
    train_seed_node,
)
from .layerwise import (
    PretrainConfig,
    pretrain_stack,
    train_autoencoder_layer,
    train_supervised_layer,
)
from .network import (
    NS_ASSIGN,
    NS_CLASSIFIER,
    NS_FINETUNE,
    NS_LAYER,
    NS_NODE,
    NS_SHUFFLE,
    NS_SPLIT,
    Mlp,
    OpCounter,
    ae_ops_per_example,
    backprop,
    codes_batch,
    derive_seed,
    forward,
    forward_batch,
    init_weights,
    load_weights,
    save_weights,
    sgd_update,
    softmax,
)
from .trainer import (
    ALGORITHMS,
    PipelineConfig,
    TrainReport,
    evaluate,
    fine_tune,
    run_pipeline,
    train_output_classifier,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Dataset",
    "GreedyConfig",
    "Mlp",
    "NS_ASSIGN",
    "NS_CLASSIFIER",
    "NS_FINETUNE",
    "NS_LAYER",
    "NS_NODE",
    "NS_SHUFFLE",
    "NS_SPLIT",
    "NormalizeParams",
    "OpCounter",
    "PipelineConfig",
    "PretrainConfig",
    "RunningOutput",
    "SplitSpec",
    "TrainReport",
    "__version__",
    "active_backend",
    "ae_ops_per_example",
    "apply_normalization",
    "backprop",
    "codes_batch",
    "cython_available",
    "derive_seed",
    "distribute_gcn",
    "distribute_gn",
    "evaluate",
    "export_feature_grid",
    "export_scatter",
    "feature_grid",
    "fine_tune",
    "forward",
    "forward_batch",
    "greedy_layer",
    "greedy_pretrain_stack",
    "init_weights",
    "load_csv",
    "load_csv_pair",
    "load_digits_dataset",
    "load_weights",
    "normalize",
    "one_hot",
    "one_hot_matrix",
    "pretrain_stack",
    "rank_by_reconstruction_error",
    "run_pipeline",
    "save_weights",
    "set_backend",
    "sgd_update",
    "softmax",
    "split",
    "train_autoencoder_layer",
    "train_node",
    "train_output_classifier",
    "train_seed_node",
    "train_supervised_layer",
    "use_backend",
    "write_pgm",
]
