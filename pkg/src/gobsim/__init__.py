"""Indoor grid-of-beam optical wireless network simulator.

Models a double-tier access point (a 3x3 array of lensed 5x5 VCSEL
arrays, 225 beams total), angle-diversity CPC receivers, static beam
clustering with coordinated joint transmission, and NOMA/OFDMA
multi-user rate analysis, with an independent ray-trace oracle for the
optical front end.
"""

__version__ = "0.1.0"

from .ap import ApConfig, BeamRecord, BeamSet, build_beams, total_intensity_field
from .beams import GaussianBeam, LensSpec, TransformedBeam, refract, transform_through_lens
from .clustering import ClusterLayout, assign_ues, builtin_layout, layout_from_file
from .config import RootConfig, resolve_config
from .mac import MacConfig, NetworkMetrics, network_metrics
from .receiver import AdrSpec, NoiseSpec, gain_tensor, noise_psd
from .rayoracle import compare_fields, sample_rays, trace_field
from .sim import CampaignSpec, DropSpec, run_campaign, run_drop, sample_drop, spatial_maps

__all__ = [
    "ApConfig",
    "AdrSpec",
    "BeamRecord",
    "BeamSet",
    "CampaignSpec",
    "ClusterLayout",
    "DropSpec",
    "GaussianBeam",
    "LensSpec",
    "MacConfig",
    "NetworkMetrics",
    "NoiseSpec",
    "RootConfig",
    "TransformedBeam",
    "assign_ues",
    "build_beams",
    "builtin_layout",
    "compare_fields",
    "gain_tensor",
    "layout_from_file",
    "network_metrics",
    "noise_psd",
    "refract",
    "resolve_config",
    "run_campaign",
    "run_drop",
    "sample_drop",
    "sample_rays",
    "spatial_maps",
    "total_intensity_field",
    "trace_field",
    "transform_through_lens",
]
