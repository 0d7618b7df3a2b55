"""Event-camera optical flow from distance surfaces of binary edge images."""
from ._backend import name as backend_name
from .accumulator import Accumulator, accumulate
from .config import PipelineConfig, build_config, load_config
from .datatypes import EVENT_DTYPE, EdgeImage, Event, FlowField, SensorGeometry, as_event_array
from .distance import Transfer, TransferParams, alpha_from_dsat, distance_surface, euclidean_dt
from .errors import *  # noqa: F401,F403
from .filtering import FilterParams, denoise, denoise_fill, fill
from .flow import FlowConfig, FlowEstimator, FlowState, estimate_flow
from .io_formats import parse_event_stream, read_flow, render_flow_png, write_flow
from .metrics import aee, evaluate, fwl, outlier_pct
from .pipeline import run_pipeline
from .synthetic import SyntheticSceneSpec, generate_synthetic_scene

__version__ = "0.1.0"
