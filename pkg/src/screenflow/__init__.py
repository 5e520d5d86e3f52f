"""screenflow: reverse-engineer touchscreen interfaces into state diagrams,
track the live screen in real time, converse to pre-specify tasks, and emit
turn-by-turn guidance toward each button press.
"""

from .agent import AgentSpec, DialogSession, generate_agent, generate_summary, new_session
from .builder import BuilderSession, IdentifyResult, identify_state
from .config import EngineConfig
from .diagram import (
    Element,
    InteractionTrace,
    State,
    StateDiagram,
    Transition,
    aggregate_traces,
    deserialize,
    serialize,
)
from .evaluation import StateEvalReport, eval_states, run_scaling
from .guidance import FramingStatus, GuidanceMessage, guidance_step, plan_trace
from .imageio import Image, load_image, save_image
from .providers import Detection, OcrResult, Rect, screen_filter, text_similarity
from .simulator import CameraProfile, DeviceSpec, GroundTruth, PROFILES, UsageScript
from .tracker import TrackerSession, TrackEvent, search_order
from .vision import (
    FeatureSet,
    Homography,
    MarkerConfig,
    MatchScore,
    MatchSet,
    TouchPoint,
    detect_touchpoint,
    estimate_homography,
    extract_features,
    match_features,
    warp_point,
)

__version__ = "0.1.0"
