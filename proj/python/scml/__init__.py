"""Question-conditioned feature selection with counterfactual metric learning."""

from ._core import (
    DatasetSpec,
    DomainError,
    ParseError,
    ShapeError,
    TrainingDiverged,
    VQAInstance,
    ablate,
    adaptive_split,
    default_config,
    evaluate,
    fixed_topk_split,
    generate,
    gradcheck,
    gumbel_softmax,
    ms_loss,
    predict,
    pseudo_labels,
    read_jsonl,
    redraw_irrelevant,
    similarity_scores,
    train,
    vqa_bce,
    write_jsonl,
)

__all__ = [name for name in dir() if not name.startswith("_")]
