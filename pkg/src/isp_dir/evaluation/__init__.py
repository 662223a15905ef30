"""Image quality, latent diagnostics and the restoration/task reports."""

from .ablation import (
    ABLATION_ROWS,
    AblationReport,
    AblationRow,
    MetricsReport,
    TaskAccuracy,
    ablation_report,
    format_table,
    metrics_report,
    task_accuracy_report,
)
from .inference import decode_baseline, degraded_test_set, restore
from .latents import (
    ClusterResult,
    invariance_distances,
    latent_invariance_ratio,
    mean_latents,
    pca_project,
    pilot_cluster_accuracy,
    write_projection_csv,
)
from .quality import SsimComponents, psnr, ssim, ssim_components

__all__ = [
    "ABLATION_ROWS",
    "AblationReport",
    "AblationRow",
    "ClusterResult",
    "MetricsReport",
    "SsimComponents",
    "TaskAccuracy",
    "ablation_report",
    "decode_baseline",
    "degraded_test_set",
    "format_table",
    "invariance_distances",
    "latent_invariance_ratio",
    "mean_latents",
    "metrics_report",
    "pca_project",
    "pilot_cluster_accuracy",
    "psnr",
    "restore",
    "ssim",
    "ssim_components",
    "task_accuracy_report",
    "write_projection_csv",
]
