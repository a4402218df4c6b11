"""segscore: segmentation evaluation engine.

Overlap metrics (IoU, DSC, sensitivity, specificity, accuracy, AUC, kappa),
average Hausdorff distance, micro/macro aggregation, dataset reports with
distribution statistics, guideline lint, and visualizations.
"""

__version__ = "0.1.0"

from .mask import (  # noqa: E402
    ClassCatalog,
    ClassEntry,
    LabelMask,
    MaskError,
    ProbabilityMap,
    load_mask,
    load_probability_map,
    save_mask,
    save_probability_map,
    shape_compatible,
)
from .confusion import ConfusionCounts, ConfusionTable, confuse, confuse_binary  # noqa: E402
from .overlap import (  # noqa: E402
    EmptyPolicy,
    MetricSet,
    RocPoint,
    Undefined,
    accuracy,
    auc_single,
    auc_trapezoid,
    dsc,
    iou,
    is_defined,
    kappa,
    metric_set,
    roc_curve,
    sensitivity,
    specificity,
)
from .distance import (  # noqa: E402
    DistanceField,
    PointSet,
    ahd,
    ahd_bruteforce,
    directed_ahd,
    edt,
    extract_points,
    hausdorff_max,
)
from .aggregate import (  # noqa: E402
    AveragingPolicy,
    EvalOptions,
    Mode,
    UndefinedHandling,
    macro_average,
    micro_average,
    per_class_report,
)
from .report import (  # noqa: E402
    DatasetReport,
    Histogram,
    ReportOptions,
    SampleResult,
    ScenarioKind,
    evaluate_dataset,
    evaluate_sample,
    histogram,
    lint_report,
    make_scenario,
)
