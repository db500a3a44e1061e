"""Learned sparse retrieval with lexicon-bottlenecked pre-training."""

from ._core import (
    ImpactIndex,
    LexmaeError,
    StorageReport,
    Workspace,
    default_config,
    dpr_recall_at_n,
    from_dense,
    marco_recall_at_n,
    mrr_at_k,
    ndcg_at_k,
    quantize,
    read_qrels,
    topk_sparsify,
)

__all__ = [
    "ImpactIndex",
    "LexmaeError",
    "StorageReport",
    "Workspace",
    "default_config",
    "dpr_recall_at_n",
    "from_dense",
    "marco_recall_at_n",
    "mrr_at_k",
    "ndcg_at_k",
    "quantize",
    "read_qrels",
    "topk_sparsify",
]
