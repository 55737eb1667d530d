"""Binary semantic signatures: training, noisy transmission, retrieval."""

from .adapt import DahConfig, DahReport, adapt, dah_objective, entropy_loss, mkmmd
from .channel import (
    ChannelConfig,
    TransmissionReport,
    awgn_ber,
    rayleigh_ber,
    transmit_batch,
    transmit_signature,
)
from .data import generate_synthetic, train_test_split_stratified
from .encoder import (
    HashModel,
    SemanticHashEncoder,
    TrainConfig,
    TrainTrace,
    encode,
    train,
)
from .entropy import (
    EntropyReport,
    MessageModel,
    load_message_model,
    message_entropy,
    recommend_code_length,
    save_message_model,
    semantic_entropy,
    semantic_mutual_information,
    symbol_distribution,
)
from .experiment import (
    ExperimentSpec,
    RunArtifacts,
    emit_report,
    emit_report_from_dir,
    parse_experiment_spec,
    run_experiment,
)
from .kernels import AnchorSet, map_features, median_heuristic_width, select_anchors
from .multiclass_svm import CrammerSingerSVM
from .retrieval import (
    KnowledgeBase,
    MetricsReport,
    average_precisions,
    evaluate_retrieval,
    hamming_distance,
    mean_average_precision,
    precision_at_radius,
    query_radius,
    reconstruct,
)
from .serialization import (
    bitstring_to_signature,
    load_features,
    load_kb_text,
    load_model,
    load_signatures_text,
    save_dataset,
    save_features_csv,
    save_kb_text,
    save_model,
    save_signatures_text,
    signature_to_bitstring,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "ChannelConfig",
    "CrammerSingerSVM",
    "DahConfig",
    "DahReport",
    "EntropyReport",
    "ExperimentSpec",
    "HashModel",
    "KnowledgeBase",
    "MessageModel",
    "MetricsReport",
    "RunArtifacts",
    "SemanticHashEncoder",
    "TrainConfig",
    "TrainTrace",
    "TransmissionReport",
    "adapt",
    "average_precisions",
    "awgn_ber",
    "bitstring_to_signature",
    "dah_objective",
    "emit_report",
    "emit_report_from_dir",
    "encode",
    "entropy_loss",
    "evaluate_retrieval",
    "generate_synthetic",
    "hamming_distance",
    "load_features",
    "load_kb_text",
    "load_message_model",
    "load_model",
    "load_signatures_text",
    "map_features",
    "mean_average_precision",
    "median_heuristic_width",
    "message_entropy",
    "mkmmd",
    "parse_experiment_spec",
    "precision_at_radius",
    "query_radius",
    "rayleigh_ber",
    "recommend_code_length",
    "reconstruct",
    "run_experiment",
    "save_dataset",
    "save_features_csv",
    "save_kb_text",
    "save_message_model",
    "save_model",
    "save_signatures_text",
    "select_anchors",
    "semantic_entropy",
    "semantic_mutual_information",
    "signature_to_bitstring",
    "symbol_distribution",
    "train",
    "train_test_split_stratified",
    "transmit_batch",
    "transmit_signature",
]
