from src.metrics.quality import build_metrics_report, frame_metrics, nmi, nmi_matrix, psnr, ssim

__all__ = ["build_metrics_report", "frame_metrics", "nmi", "nmi_matrix", "psnr", "ssim"]
