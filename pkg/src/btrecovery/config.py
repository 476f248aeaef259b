"""Central knob file: every dimensioned constant and parameter bound lives here.

The simulator geometry and thresholds are chosen so that the shipped failure
scenarios exercise qualitatively different recovery regimes (a graspable
blocker, a blocker that only moves above a force threshold, a peg that must be
handed between arms) while every quantity stays exactly testable.
"""

# --- integration ---
DT = 0.01                     # s per simulation step
EPISODE_TIME_CAP = 30.0       # s, hard episode cap
MAX_TICKS = 50_000            # safety valve on the tick loop

# --- geometry (m) ---
PEG_RADIUS = 0.010
PEG_LENGTH = 0.050
CLEARANCE = 0.003             # hole radius minus peg radius
HOLE_RADIUS = PEG_RADIUS + CLEARANCE
GRIPPER_OPENING = 0.040       # max graspable footprint diameter
BLOCK_TOP_Z = 0.050           # top face of the hole block above the table
HOLE_DEPTH = 0.040            # inserted peg tip sits at BLOCK_TOP_Z - HOLE_DEPTH
BLOCK_HALF_EXTENT = 0.060     # square footprint of the hole block
APPROACH_TIP_HEIGHT = 0.020   # peg tip hover above the block top at approach

# --- contact / manipulation ---
CONTACT_FORCE_FLOOR = 2.0     # N, minimum downward force for the peg to seat
HEAVY_PUSH_THRESHOLD = 15.0   # N, default for heavy obstacles
PUSH_SPEED = 0.05             # m/s, nominal push speed for force accounting
REACH = 0.02                  # m, gripper reach for grasp and push contact
GOTO_TOL = 1e-3               # m, linear-motion arrival tolerance
DEFAULT_VELOCITY_LIMIT = 0.10 # m/s
DEFAULT_STIFFNESS = (2000.0, 2000.0, 2000.0)  # N/m
SPIRAL_THETA_FLOOR = 1e-4     # m, radius floor for the angle update near r=0

# --- domain randomization ---
HOLE_NOISE_STD = 0.008        # m, Gaussian std of the hole-estimate offset
N_START_POSES = 5

# --- rewards ---
W_SUCCESS = 100.0
W_PROXIMITY = 50.0
W_DEPTH = 25.0
PROXIMITY_SCALE = 0.05        # m, lateral-error scale in the proximity term
FORCE_NORMALIZER = 300.0      # N*s, cumulative-force normalizer
INSERTION_REWARD_MAX = W_SUCCESS + W_PROXIMITY + W_DEPTH

# --- learnable parameter bounds ---
INSERTION_FORCE_BOUNDS = (1.0, 30.0)        # N
INSERTION_VELOCITY_BOUNDS = (0.01, 0.10)    # m/s
INSERTION_DISTANCE_BOUNDS = (0.01, 0.20)    # m
INSERTION_RADIUS_BOUNDS = (0.0, 0.03)       # m
PUSH_FORCE_BOUNDS = (1.0, 40.0)             # N
EXCHANGE_OFFSET_BOUNDS = (-0.02, 0.02)      # m, each axis

# --- experiment protocol defaults ---
DEFAULT_ITERATIONS = 40
DEFAULT_EVALS_PER_ITERATION = 5
DEFAULT_REPETITIONS = 10
SUCCESS_RULE_MIN_EVALS = 3    # a policy counts as successful at >= 3 of 5

# --- optimizer ---
N_INITIAL_PROPOSALS = 10      # quasi-random warmup points
N_EI_CANDIDATES = 2048
GP_JITTER = 1e-6
GP_LENGTHSCALE_DIVISOR = 16.0 # lengthscale^2 = median pairwise d^2 / divisor
GP_NOISE_INFLATION = 4.0      # conservative scaling of replicate variance
EI_XI = 0.0
