"""Shadow-aware correlation-filter tracking."""

from .imaging import BoundingBox, Component, load_frame, save_frame
from .shadow_detect import ShadowDetectorConfig, clean_mask, detect_shadows
from .corr_filter import CorrelationFilter, FilterConfig, correlate, init_filter, update_filter
from .tracker import Mode, Tracker, TrackerConfig, TrackerState, TrackStep
from .synth import GroundTruth, ScenarioSpec, generate, preset

__version__ = "0.1.0"
