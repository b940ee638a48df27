"""
Configuration settings for the trajmt harness
"""
import os
import json
import logging
from dataclasses import dataclass, field, asdict, fields
from typing import List, Dict, Any, Optional

from errors import ConfigError

logger = logging.getLogger(__name__)

# Application settings
APP_NAME = "trajmt"
APP_VERSION = "2.0.0"

# Output settings
OUTPUT_DIR = "output"
CONFIG_FILE = "trajmt_config.json"
SUITE_FILE = "suite.json"
ROWS_DB_FILE = "rows.db"
TRACES_DIR = "traces"
THRESHOLDS_FILE = "thresholds.json"

# Geometry
QUATERNION_TOLERANCE = 1e-9
BRUTE_FORCE_MAX_SAMPLES = 8

# Scenes (all lengths in meters)
TABLE_HEIGHT = 0.0
WORKSPACE_MIN = (-0.35, -0.35, 0.0)
WORKSPACE_MAX = (0.35, 0.35, 0.5)
BRIGHTNESS_MAX = 4.0
OVERLAP_TOLERANCE = 1e-6
CONTAINER_WALL = 0.005
FLOAT_DIGITS = 9

TASK_KINDS = ["PickUp", "MoveNear", "PutOn", "PutIn"]

# The first verb of each list is the canonical instruction verb
VERB_LEXICON = {
    "PickUp": ["pick", "grab", "take", "lift"],
    "MoveNear": ["move", "bring", "shift"],
    "PutOn": ["put", "place", "set", "stack"],
    "PutIn": ["put", "place", "insert", "drop"],
}

# Scripted controller
STEP_SIZE = 0.01
HOME_HEIGHT = 0.30
PRE_GRASP_HEIGHT = 0.10
LIFT_HEIGHT = 0.15
GRASP_REACH = 0.02
NEAR_GAP = 0.005
FALL_STEP = 0.02
STATIONARY_STEPS = 20
REGRASP_DELAY = 10
GRASP_INSTABILITY_DELAY = 5
OSCILLATION_PERIOD = 4  # samples per lateral triangle wave
COLLISION_BLIND_CLEARANCE = 0.005
COLLISION_BLIND_DEPTH = 0.01  # how far a collision-blind grasp sinks into the target
CONTACT_TOLERANCE = 1e-6

# Symbolic oracles
LIFT_THRESHOLD = 0.02
LIFT_FRAMES = 5
NEAR_THRESHOLD = 0.05
STACK_TOLERANCE = 5e-3
STILLNESS_TOLERANCE = 1e-4
STILLNESS_FRAMES = 5

# Failure diagnosis
PENETRATION_THRESHOLD = 1e-3
SUBOPTIMALITY_RATIO = 2.0
REVERSAL_LIMIT = 8
NO_MOTION_THRESHOLD = 1e-3
PLACEMENT_SLACK = 2.0
VELOCITY_DEADBAND = 1e-9

# Metamorphic relations
MR_KINDS = ["MR1_Synonym", "MR2_ObjectAddition", "MR3_Brightness",
            "MR4_Negation", "MR5_Relocation"]
STRICTNESS_LEVELS = ["High", "Medium", "Low"]
TC_DELTAS = {"High": 0.1, "Medium": 0.2, "Low": 0.3}
NEGATION_DELTAS = {"High": 0.3, "Medium": 0.2, "Low": 0.1}
MR5_ALPHA = 0.5
MR5_BETA = 2.0
MR5_PRESETS = {"High": (0.8, 1.5), "Medium": (0.5, 2.0), "Low": (0.3, 3.0)}
BRIGHTNESS_FACTORS = [0.6, 0.8, 1.2, 1.4]
DISTRACTOR_SPACING = 0.1
PATH_CLEARANCE = 0.05
DISTRACTOR_HALF_EXTENT = 0.02
DISTRACTOR_LABELS = ["sponge", "bottle", "cup", "banana", "eggplant"]
MAX_PLACEMENT_ATTEMPTS = 1000
RELOCATION_MIN = 0.05
RELOCATION_MAX = 0.25

# Source suite generation
TARGET_RADIUS = (0.2, 0.3)
REFERENCE_RADIUS = (0.12, 0.3)
REFERENCE_SPACING = 0.12
PLACEMENT_GRID = 1e-4
TARGET_LABELS = ["apple", "cube", "can", "carrot", "lemon"]
NEAR_LABELS = ["orange", "coke can", "pear"]
SURFACE_LABELS = ["plate", "towel", "tray"]
CONTAINER_LABELS = ["basket", "bowl", "box"]
TARGET_HALF_EXTENTS = (0.02, 0.02, 0.02)
NEAR_HALF_EXTENTS = (0.02, 0.02, 0.03)
SURFACE_HALF_EXTENTS = (0.05, 0.05, 0.01)
CONTAINER_HALF_EXTENTS = (0.06, 0.06, 0.03)

# Reports
REPORT_VERSION = 1
SVG_WIDTH = 800
SVG_HEIGHT = 600
COLOR_RAMP = ["#f7fbff", "#c6dbef", "#6baed6", "#2171b5", "#08306b"]


@dataclass
class CampaignConfig:
    """Settings of one gen/run/report campaign"""
    seed: int = 0
    tasks: List[str] = field(default_factory=lambda: list(TASK_KINDS))
    sources_per_task: int = 10
    mrs: List[str] = field(default_factory=lambda: list(MR_KINDS))
    strictness: List[str] = field(default_factory=lambda: list(STRICTNESS_LEVELS))
    fault: Dict[str, Any] = field(default_factory=lambda: {"kind": "None", "magnitude": 0.0})
    mr5_alpha: Optional[float] = None
    mr5_beta: Optional[float] = None
    brightness_factors: List[float] = field(default_factory=lambda: list(BRIGHTNESS_FACTORS))
    output_dir: str = OUTPUT_DIR
    jobs: int = 1
    dump_traces: bool = False
    fail_on_violation: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CampaignConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        config = cls(**data)
        config.validate()
        return config

    def validate(self):
        """Check the invariants every command relies on"""
        if self.sources_per_task < 1:
            raise ConfigError("sources_per_task must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        for task in self.tasks:
            if task not in TASK_KINDS:
                raise ConfigError(f"Unknown task: {task}")
        for mr in self.mrs:
            if mr not in MR_KINDS:
                raise ConfigError(f"Unknown metamorphic relation: {mr}")
        for level in self.strictness:
            if level not in STRICTNESS_LEVELS:
                raise ConfigError(f"Unknown strictness level: {level}")
        if not isinstance(self.fault, dict) or 'kind' not in self.fault:
            raise ConfigError("fault must be an object with a 'kind' entry")
        if not self.brightness_factors or any(f <= 0 for f in self.brightness_factors):
            raise ConfigError("brightness_factors must be positive")


class ConfigManager:
    """Manager for campaign configuration files"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self.config = self.load_config()

    def load_config(self) -> CampaignConfig:
        """Load configuration from file, falling back to defaults"""
        if not self.config_file:
            return CampaignConfig()

        if not os.path.exists(self.config_file):
            raise ConfigError(f"Config file not found: {self.config_file}")

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Malformed config file {self.config_file}: {e}") from e

        if not isinstance(data, dict):
            raise ConfigError(f"Config file {self.config_file} must hold a JSON object")

        logger.debug("Loaded config from %s", self.config_file)
        return CampaignConfig.from_dict(data)

    def save_config(self, path: Optional[str] = None):
        """Save configuration to file"""
        path = path or self.config_file or CONFIG_FILE
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.config.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')

    def apply_overrides(self, overrides: Dict[str, Any]) -> CampaignConfig:
        """Apply command-line overrides; flags win over the file"""
        data = self.config.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            data[key] = value
        self.config = CampaignConfig.from_dict(data)
        return self.config
