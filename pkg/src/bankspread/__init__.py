"""Bank statement spreading from document-understanding model output.

The package turns three upstream signals (table/region detections,
table structure detections, OCR words) into a certified transaction
ledger: every table is categorized, reconciled into a grid, read into
dated and signed amounts, and the whole statement is checked against
its opening/closing balances with an exact zero-sum test.

Entry points: :func:`bankspread.pipeline.run_pipeline` for library use,
the ``bankspread`` command for everything else.
"""

from .docmodel import (
    DetectedObject,
    OcrWord,
    PageImage,
    ParseError,
    StatementDocument,
    Summary,
    TableCategory,
    TsrClass,
    parse_document,
    serialize_document,
    validate_document,
    write_document,
)
from .geometry import (
    Box,
    BoxLossVariant,
    LossWeights,
    Prediction,
    ciou_loss,
    diou_loss,
    giou_loss,
    iou,
    nms,
    set_prediction_loss,
)
from .metrics import (
    DetectionMetrics,
    EvalPair,
    classifier_f1,
    detection_metrics,
    krippendorff_alpha,
)
from .pipeline import (
    PipelineConfig,
    PipelineError,
    PipelineResult,
    Thresholds,
    run_pipeline,
)
from .spreading import (
    ColumnRole,
    DiscardedRow,
    SpreadTable,
    Transaction,
    compute_checksum,
    extract_transactions,
    parse_amount,
    parse_date,
)
from .synthgen import GenConfig, build_text_corpus, generate_statement
from .tdc import NBModelSet, refine_category, train_model_set
from .tsr import TableGrid, assign_text, build_grid, refine_structure

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxLossVariant",
    "ColumnRole",
    "DetectedObject",
    "DetectionMetrics",
    "DiscardedRow",
    "EvalPair",
    "GenConfig",
    "LossWeights",
    "NBModelSet",
    "OcrWord",
    "PageImage",
    "ParseError",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "Prediction",
    "SpreadTable",
    "StatementDocument",
    "Summary",
    "TableCategory",
    "TableGrid",
    "Thresholds",
    "Transaction",
    "TsrClass",
    "assign_text",
    "build_grid",
    "build_text_corpus",
    "ciou_loss",
    "classifier_f1",
    "compute_checksum",
    "detection_metrics",
    "diou_loss",
    "extract_transactions",
    "generate_statement",
    "giou_loss",
    "iou",
    "krippendorff_alpha",
    "nms",
    "parse_amount",
    "parse_date",
    "parse_document",
    "refine_category",
    "refine_structure",
    "run_pipeline",
    "serialize_document",
    "set_prediction_loss",
    "train_model_set",
    "validate_document",
    "write_document",
    "__version__",
]
