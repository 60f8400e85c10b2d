"""Image-set evaluation metrics: SSIM, Lab Wasserstein distance and FID."""
from .features import (
    FeatureCache,
    FeatureExtractor,
    RandomProjectionExtractor,
    TorchScriptExtractor,
    extract_features,
    fid,
    fid_from_features,
)
from .frechet import FeatureGaussian, fit_feature_gaussian, frechet_distance, sqrtm_psd
from .ssim import SsimResult, mean_stderr, ssim, ssim_stats
from .wasserstein import EmpiricalDistribution, pooled_ab, wasserstein_1d, wd_color

__all__ = [
    "EmpiricalDistribution",
    "FeatureCache",
    "FeatureExtractor",
    "FeatureGaussian",
    "RandomProjectionExtractor",
    "SsimResult",
    "TorchScriptExtractor",
    "extract_features",
    "fid",
    "fid_from_features",
    "fit_feature_gaussian",
    "frechet_distance",
    "mean_stderr",
    "pooled_ab",
    "sqrtm_psd",
    "ssim",
    "ssim_stats",
    "wasserstein_1d",
    "wd_color",
]
