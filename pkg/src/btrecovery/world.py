"""Deterministic quasi-static simulator for dual-arm peg-in-hole manipulation.

There are no dynamics: end-effectors track commanded targets at a velocity
limit on stiff axes, zero-stiffness axes are driven by the commanded wrench
against unilateral contact, and grasped objects move rigidly with the
gripper.  Everything is plain float arithmetic, so identical inputs produce
bit-identical states.

Public operations are functions from state to state: they clone the incoming
:class:`WorldState` and return the modified copy.  The underscore-prefixed
twins mutate in place; the episode executor uses them on its private copy to
keep the tick loop allocation-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import config


class InvalidCommand(Exception):
    pass


class PreconditionViolated(Exception):
    pass


class NotGraspable(Exception):
    pass


class OutOfReach(Exception):
    pass


class GripperOccupied(Exception):
    pass


class NothingHeld(Exception):
    pass


class NoContact(Exception):
    pass


class GripperState(Enum):
    OPEN = "open"
    CLOSED = "closed"


class ObstacleKind(Enum):
    LIGHT = "light"
    HEAVY = "heavy"


PEG = "peg"
TABLE = "table"
INSERTED = "inserted"


@dataclass
class Pose:
    x: float
    y: float
    z: float
    yaw: float = 0.0

    def copy(self) -> "Pose":
        return Pose(self.x, self.y, self.z, self.yaw)

    def to_list(self) -> list:
        return [self.x, self.y, self.z, self.yaw]

    @staticmethod
    def from_list(v) -> "Pose":
        return Pose(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


@dataclass
class Spiral:
    radius_max: float
    path_velocity: float
    path_distance: float


@dataclass
class MgCommand:
    """Motion-generator setpoint for one arm.

    A zero stiffness on an axis disables position tracking there; the wrench
    component drives that axis instead.
    """

    target: Pose
    stiffness: tuple = config.DEFAULT_STIFFNESS
    wrench: tuple = (0.0, 0.0, 0.0)
    spiral: Optional[Spiral] = None
    velocity_limit: float = config.DEFAULT_VELOCITY_LIMIT

    def validate(self) -> None:
        if any(s < 0 for s in self.stiffness):
            raise InvalidCommand("stiffness components must be >= 0")
        if self.velocity_limit <= 0:
            raise InvalidCommand("velocity_limit must be > 0")
        if self.spiral is not None:
            sp = self.spiral
            if sp.radius_max < 0 or sp.path_distance < 0 or sp.path_velocity <= 0:
                raise InvalidCommand("invalid spiral parameters")


@dataclass
class Obstacle:
    id: str
    kind: ObstacleKind
    footprint_radius: float
    x: float
    y: float
    z: float = 0.0
    push_threshold: float = config.HEAVY_PUSH_THRESHOLD

    def __post_init__(self):
        if self.kind is ObstacleKind.LIGHT and self.footprint_radius > config.GRIPPER_OPENING:
            raise InvalidCommand(
                f"light obstacle {self.id!r} footprint exceeds gripper opening")
        if self.kind is ObstacleKind.HEAVY and self.push_threshold <= 0:
            raise InvalidCommand("heavy obstacle needs push_threshold > 0")

    def copy(self) -> "Obstacle":
        return Obstacle(self.id, self.kind, self.footprint_radius,
                        self.x, self.y, self.z, self.push_threshold)


@dataclass
class Peg:
    x: float            # axis position
    y: float
    tip_z: float
    yaw: float = 0.0
    radius: float = config.PEG_RADIUS
    length: float = config.PEG_LENGTH
    holder: str = TABLE  # arm id, "table", or "inserted"

    def copy(self) -> "Peg":
        return Peg(self.x, self.y, self.tip_z, self.yaw,
                   self.radius, self.length, self.holder)


@dataclass
class HoleBlock:
    x: float
    y: float
    top_z: float = config.BLOCK_TOP_Z
    hole_radius: float = config.HOLE_RADIUS
    half_extent: float = config.BLOCK_HALF_EXTENT

    def copy(self) -> "HoleBlock":
        return HoleBlock(self.x, self.y, self.top_z, self.hole_radius, self.half_extent)


@dataclass
class Arm:
    id: str
    ee: Pose
    gripper: GripperState = GripperState.OPEN
    held: Optional[str] = None          # "peg" or an obstacle id
    grasp_offset: tuple = (0.0, 0.0)
    stiffness: tuple = config.DEFAULT_STIFFNESS
    wrench: tuple = (0.0, 0.0, 0.0)

    def copy(self) -> "Arm":
        return Arm(self.id, self.ee.copy(), self.gripper, self.held,
                   self.grasp_offset, self.stiffness, self.wrench)


@dataclass
class WorldState:
    arms: dict
    peg: Peg
    hole: HoleBlock
    obstacles: list
    clearance: float = config.CLEARANCE
    hole_estimate_offset: tuple = (0.0, 0.0)
    hole_noise_std: float = config.HOLE_NOISE_STD
    active_arm: str = "left"
    start_poses: tuple = ()
    force_integral: float = 0.0
    time: float = 0.0
    contact_force: float = 0.0
    min_peg_lateral: float = math.inf
    events: list = field(default_factory=list)

    def clone(self) -> "WorldState":
        return WorldState(
            arms={k: a.copy() for k, a in self.arms.items()},
            peg=self.peg.copy(),
            hole=self.hole.copy(),
            obstacles=[o.copy() for o in self.obstacles],
            clearance=self.clearance,
            hole_estimate_offset=self.hole_estimate_offset,
            hole_noise_std=self.hole_noise_std,
            active_arm=self.active_arm,
            start_poses=tuple(p.copy() for p in self.start_poses),
            force_integral=self.force_integral,
            time=self.time,
            contact_force=self.contact_force,
            min_peg_lateral=self.min_peg_lateral,
            events=list(self.events),
        )

    def arm(self, arm_id: str) -> Arm:
        return self.arms[arm_id]

    def obstacle(self, obstacle_id: str) -> Obstacle:
        for o in self.obstacles:
            if o.id == obstacle_id:
                return o
        raise KeyError(obstacle_id)


# --- derived predicates and geometry helpers -----------------------------

def hole_blocked(world: WorldState) -> bool:
    """An obstacle footprint overlaps the hole opening (2D check)."""
    for o in world.obstacles:
        if math.hypot(o.x - world.hole.x, o.y - world.hole.y) < \
                o.footprint_radius + world.hole.hole_radius:
            return True
    return False


def commanded_hole_center(world: WorldState) -> tuple:
    """Where the robot believes the hole is: true center plus estimate error."""
    ex, ey = world.hole_estimate_offset
    return (world.hole.x + ex, world.hole.y + ey)


def approach_pose(world: WorldState) -> Pose:
    """End-effector pose that hovers the peg tip above the believed hole."""
    cx, cy = commanded_hole_center(world)
    ee_z = world.hole.top_z + config.APPROACH_TIP_HEIGHT + config.PEG_LENGTH
    return Pose(cx, cy, ee_z)


def surface_z(world: WorldState, x: float, y: float) -> float:
    """Height of the supporting surface under (x, y): block top or table."""
    if abs(x - world.hole.x) <= world.hole.half_extent and \
            abs(y - world.hole.y) <= world.hole.half_extent:
        return world.hole.top_z
    return 0.0


def peg_lateral_error(world: WorldState) -> float:
    return math.hypot(world.peg.x - world.hole.x, world.peg.y - world.hole.y)


def goal_tip_position(world: WorldState) -> tuple:
    """Peg tip position when fully inserted."""
    return (world.hole.x, world.hole.y, world.hole.top_z - config.HOLE_DEPTH)


def _track_peg(world: WorldState) -> None:
    d = peg_lateral_error(world)
    if d < world.min_peg_lateral:
        world.min_peg_lateral = d


def _sync_held(world: WorldState, arm: Arm) -> None:
    """Re-pin held objects to the gripper after the arm moved."""
    if arm.held is None:
        return
    dx, dy = arm.grasp_offset
    if arm.held == PEG:
        if world.peg.holder == arm.id:
            world.peg.x = arm.ee.x + dx
            world.peg.y = arm.ee.y + dy
            world.peg.tip_z = arm.ee.z - world.peg.length
            _track_peg(world)
    else:
        ob = world.obstacle(arm.held)
        ob.x = arm.ee.x + dx
        ob.y = arm.ee.y + dy
        ob.z = arm.ee.z


# --- motion --------------------------------------------------------------

def step_motion(world: WorldState, arm_id: str, cmd: MgCommand, dt: float) -> WorldState:
    """Advance one arm by one quasi-static integration step.

    Stiff axes move straight toward the target at the velocity limit.
    Zero-stiffness axes move along the wrench direction; for the vertical
    axis a supporting surface is a unilateral constraint: once the carried
    peg tip rests on it, downward motion stops and the wrench magnitude is
    registered as contact force, accumulating ``|wrench| * dt`` into the
    force integral.
    """
    w = world.clone()
    _step_motion(w, arm_id, cmd, dt)
    return w


def _step_motion(world: WorldState, arm_id: str, cmd: MgCommand, dt: float) -> None:
    if dt <= 0:
        raise InvalidCommand("dt must be > 0")
    cmd.validate()
    arm = world.arms[arm_id]
    ee = arm.ee
    sx, sy, sz = cmd.stiffness
    budget = cmd.velocity_limit * dt

    # position tracking on stiff axes
    dx = (cmd.target.x - ee.x) if sx > 0 else 0.0
    dy = (cmd.target.y - ee.y) if sy > 0 else 0.0
    dz = (cmd.target.z - ee.z) if sz > 0 else 0.0
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist > 1e-12:
        scale = min(budget, dist) / dist
        ee.x += dx * scale
        ee.y += dy * scale
        ee.z += dz * scale
    if sx > 0 or sy > 0:
        ee.yaw = cmd.target.yaw

    # wrench-driven axes
    wx, wy, wz = cmd.wrench
    wnorm = math.sqrt(wx * wx + wy * wy + wz * wz)
    contact = False
    if sx == 0 and wx != 0:
        ee.x += math.copysign(budget, wx)
    if sy == 0 and wy != 0:
        ee.y += math.copysign(budget, wy)
    if sz == 0 and wz != 0:
        if wz > 0:
            ee.z += budget
        else:
            floor = _vertical_floor(world, arm)
            if ee.z - budget <= floor:
                if ee.z > floor:
                    ee.z = floor
                contact = True
            else:
                ee.z -= budget

    world.contact_force = wnorm if contact else 0.0
    if contact:
        world.force_integral += wnorm * dt
    world.time += dt
    _sync_held(world, arm)
    if arm.held != PEG:
        _track_peg(world)


def _vertical_floor(world: WorldState, arm: Arm) -> float:
    """Lowest end-effector height before the carried peg (or the gripper
    itself) rests on the surface below."""
    if arm.held == PEG and world.peg.holder == arm.id:
        dx, dy = arm.grasp_offset
        return surface_z(world, arm.ee.x + dx, arm.ee.y + dy) + world.peg.length
    return surface_z(world, arm.ee.x, arm.ee.y) + 0.02  # bare gripper body


# --- grasping ------------------------------------------------------------

def grasp(world: WorldState, arm_id: str, obj: str, offset: tuple = (0.0, 0.0)) -> WorldState:
    w = world.clone()
    _grasp(w, arm_id, obj, offset)
    return w


def _grasp(world: WorldState, arm_id: str, obj: str, offset: tuple) -> None:
    arm = world.arms[arm_id]
    if arm.gripper is not GripperState.OPEN or arm.held is not None:
        raise GripperOccupied(arm_id)
    gx, gy = arm.ee.x + offset[0], arm.ee.y + offset[1]
    if obj == PEG:
        if world.peg.holder == INSERTED:
            raise NotGraspable("peg is inserted")
        target = (world.peg.x, world.peg.y)
    else:
        ob = world.obstacle(obj)
        if ob.kind is ObstacleKind.HEAVY:
            raise NotGraspable(obj)
        for other in world.arms.values():
            if other.id != arm_id and other.held == obj:
                raise NotGraspable(f"{obj} held by {other.id}")
        target = (ob.x, ob.y)
    if math.hypot(target[0] - gx, target[1] - gy) > config.REACH:
        raise OutOfReach(obj)

    arm.gripper = GripperState.CLOSED
    arm.held = obj
    arm.grasp_offset = (offset[0], offset[1])
    if obj == PEG:
        world.peg.holder = arm_id  # hand-to-hand transfer reassigns the holder
    _sync_held(world, arm)
    world.events.append((world.time, f"grasp:{arm_id}:{obj}"))


def release(world: WorldState, arm_id: str) -> WorldState:
    w = world.clone()
    _release(w, arm_id)
    return w


def _release(world: WorldState, arm_id: str) -> None:
    arm = world.arms[arm_id]
    if arm.held is None:
        raise NothingHeld(arm_id)
    obj = arm.held
    arm.held = None
    arm.gripper = GripperState.OPEN
    arm.grasp_offset = (0.0, 0.0)
    if obj == PEG:
        if world.peg.holder == arm_id:
            # settle onto the surface below; a peg let go over an open hole
            # drops in
            if peg_lateral_error(world) <= world.clearance and not hole_blocked(world):
                world.peg.x = world.hole.x
                world.peg.y = world.hole.y
                world.peg.tip_z = world.hole.top_z - config.HOLE_DEPTH
                world.peg.holder = INSERTED
            else:
                world.peg.tip_z = surface_z(world, world.peg.x, world.peg.y)
                world.peg.holder = TABLE
            _track_peg(world)
        # else: the peg was taken over by the other arm; just let go
    else:
        ob = world.obstacle(obj)
        ob.z = surface_z(world, ob.x, ob.y)
    world.events.append((world.time, f"release:{arm_id}:{obj}"))


# --- pushing -------------------------------------------------------------

def apply_push(world: WorldState, arm_id: str, obstacle_id: str,
               direction: tuple, force: float, distance: float) -> WorldState:
    w = world.clone()
    _apply_push(w, arm_id, obstacle_id, direction, force, distance)
    return w


def _apply_push(world: WorldState, arm_id: str, obstacle_id: str,
                direction: tuple, force: float, distance: float) -> None:
    arm = world.arms[arm_id]
    ob = world.obstacle(obstacle_id)
    if math.hypot(ob.x - arm.ee.x, ob.y - arm.ee.y) > config.REACH:
        raise NoContact(obstacle_id)
    norm = math.hypot(direction[0], direction[1])
    if norm < 1e-12:
        raise InvalidCommand("push direction must be nonzero")
    ux, uy = direction[0] / norm, direction[1] / norm
    moved = ob.kind is ObstacleKind.LIGHT or force >= ob.push_threshold
    if moved:
        ob.x += ux * distance
        ob.y += uy * distance
        ob.z = surface_z(world, ob.x, ob.y)
    duration = distance / config.PUSH_SPEED
    world.force_integral += force * duration
    world.time += duration
    world.events.append((world.time, f"push:{obstacle_id}:{'moved' if moved else 'stuck'}"))


# --- spiral insertion ----------------------------------------------------

@dataclass
class InsertionParams:
    force: float          # N, downward
    path_velocity: float  # m/s along the spiral
    path_distance: float  # m, total arc length budget
    radius: float         # m, spiral radius at full path distance


@dataclass
class InsertionOutcome:
    success: bool
    min_lateral_error: float
    cumulative_force: float
    final_peg_z: float


def run_insertion(world: WorldState, arm_id: str,
                  params: InsertionParams) -> tuple:
    """Press down and sweep an outward spiral until the peg seats or the
    path budget runs out.

    The spiral is centered on the believed hole position; its radius grows
    linearly with traversed arc length, ``r(s) = radius * s / path_distance``,
    sampled every ``DT`` at constant path velocity.  The peg drops the first
    time its axis passes within the radial clearance of the true hole center
    while the opening is unobstructed and the commanded downward force is at
    least the seating floor.

    Returns ``(new_world, InsertionOutcome)``.
    """
    w = world.clone()
    outcome = _run_insertion(w, arm_id, params)
    return w, outcome


def _run_insertion(world: WorldState, arm_id: str, params: InsertionParams) -> InsertionOutcome:
    if params.force <= 0 or params.path_velocity <= 0 or \
            params.path_distance < 0 or params.radius < 0:
        raise InvalidCommand("invalid insertion parameters")
    arm = world.arms[arm_id]
    if arm.held != PEG or world.peg.holder != arm_id:
        raise PreconditionViolated("peg not held by the insertion arm")
    app = approach_pose(world)
    if math.hypot(arm.ee.x - app.x, arm.ee.y - app.y) > 2 * config.GOTO_TOL:
        raise PreconditionViolated("arm not at the approach pose")

    dt = config.DT
    ox, oy = arm.grasp_offset
    # the spiral is commanded around the believed hole position; the arrival
    # tolerance of the preceding linear motion is absorbed here
    cx, cy = commanded_hole_center(world)
    arm.ee.x, arm.ee.y = cx, cy
    hx, hy = world.hole.x, world.hole.y
    seat_ok = params.force >= config.CONTACT_FORCE_FLOOR
    cumulative = 0.0
    min_lateral = math.inf

    # descend under the wrench until the tip rests on the block top
    floor_z = surface_z(world, cx + ox, cy + oy) + world.peg.length
    while arm.ee.z > floor_z and world.time < config.EPISODE_TIME_CAP:
        arm.ee.z = max(floor_z, arm.ee.z - config.DEFAULT_VELOCITY_LIMIT * dt)
        world.time += dt
    _sync_held(world, arm)
    min_lateral = min(min_lateral, peg_lateral_error(world))

    success = False
    blocked = hole_blocked(world)
    s = 0.0
    theta = 0.0
    pd = params.path_distance
    step = params.path_velocity * dt

    def lateral_at(px, py):
        return math.hypot(px + ox - hx, py + oy - hy)

    # contact sample at the spiral center before any lateral motion
    world.contact_force = params.force
    world.force_integral += params.force * dt
    cumulative += params.force * dt
    world.time += dt
    if seat_ok and not blocked and lateral_at(cx, cy) <= world.clearance:
        success = True

    while not success and s < pd and world.time < config.EPISODE_TIME_CAP:
        s += step
        r = params.radius * (s / pd) if pd > 0 else 0.0
        theta += step / max(r, config.SPIRAL_THETA_FLOOR)
        px = cx + r * math.cos(theta)
        py = cy + r * math.sin(theta)
        arm.ee.x = px
        arm.ee.y = py
        world.force_integral += params.force * dt
        cumulative += params.force * dt
        world.time += dt
        lat = lateral_at(px, py)
        if lat < min_lateral:
            min_lateral = lat
        if seat_ok and not blocked and lat <= world.clearance:
            success = True
    _sync_held(world, arm)
    if world.peg.holder == arm_id and peg_lateral_error(world) < min_lateral:
        min_lateral = peg_lateral_error(world)

    if success:
        world.peg.x = hx
        world.peg.y = hy
        world.peg.tip_z = world.hole.top_z - config.HOLE_DEPTH
        world.peg.holder = INSERTED
        arm.held = None
        arm.gripper = GripperState.OPEN
        arm.grasp_offset = (0.0, 0.0)
        world.min_peg_lateral = 0.0
        world.events.append((world.time, "inserted"))
    else:
        world.peg.tip_z = floor_z - world.peg.length
        if min_lateral < world.min_peg_lateral:
            world.min_peg_lateral = min_lateral
    world.contact_force = 0.0
    return InsertionOutcome(success, min_lateral, cumulative, world.peg.tip_z)


# --- domain randomization --------------------------------------------------

def randomize_domain(world: WorldState, seed: int) -> WorldState:
    """Seeded perturbation applied before each episode.

    The believed hole position gets independent Gaussian noise per axis; the
    active arm starts at one of the fixed start poses, drawn uniformly.
    Identical seeds produce identical worlds.
    """
    w = world.clone()
    rng = np.random.default_rng(seed)
    sigma = w.hole_noise_std
    ex = float(rng.normal(0.0, sigma)) if sigma > 0 else 0.0
    ey = float(rng.normal(0.0, sigma)) if sigma > 0 else 0.0
    w.hole_estimate_offset = (ex, ey)
    if w.start_poses:
        idx = int(rng.integers(len(w.start_poses)))
        arm = w.arms[w.active_arm]
        arm.ee = w.start_poses[idx].copy()
        _sync_held(w, arm)
    return w


# --- document serialization ------------------------------------------------

def world_to_doc(world: WorldState) -> dict:
    return {
        "arms": {
            a.id: {
                "ee": a.ee.to_list(),
                "gripper": a.gripper.value,
                "held": a.held,
                "grasp_offset": list(a.grasp_offset),
            } for a in world.arms.values()
        },
        "peg": {"x": world.peg.x, "y": world.peg.y, "tip_z": world.peg.tip_z,
                "yaw": world.peg.yaw, "radius": world.peg.radius,
                "length": world.peg.length, "holder": world.peg.holder},
        "hole": {"x": world.hole.x, "y": world.hole.y, "top_z": world.hole.top_z,
                 "hole_radius": world.hole.hole_radius,
                 "half_extent": world.hole.half_extent},
        "obstacles": [
            {"id": o.id, "kind": o.kind.value, "footprint_radius": o.footprint_radius,
             "x": o.x, "y": o.y, "z": o.z, "push_threshold": o.push_threshold}
            for o in world.obstacles
        ],
        "clearance": world.clearance,
        "hole_noise_std": world.hole_noise_std,
        "active_arm": world.active_arm,
        "start_poses": [p.to_list() for p in world.start_poses],
    }


def world_from_doc(doc: dict) -> WorldState:
    arms = {}
    for arm_id, a in doc["arms"].items():
        arms[arm_id] = Arm(
            id=arm_id,
            ee=Pose.from_list(a["ee"]),
            gripper=GripperState(a["gripper"]),
            held=a["held"],
            grasp_offset=tuple(a["grasp_offset"]),
        )
    p = doc["peg"]
    h = doc["hole"]
    return WorldState(
        arms=arms,
        peg=Peg(p["x"], p["y"], p["tip_z"], p["yaw"], p["radius"], p["length"], p["holder"]),
        hole=HoleBlock(h["x"], h["y"], h["top_z"], h["hole_radius"], h["half_extent"]),
        obstacles=[
            Obstacle(o["id"], ObstacleKind(o["kind"]), o["footprint_radius"],
                     o["x"], o["y"], o["z"], o["push_threshold"])
            for o in doc["obstacles"]
        ],
        clearance=doc["clearance"],
        hole_noise_std=doc["hole_noise_std"],
        active_arm=doc["active_arm"],
        start_poses=tuple(Pose.from_list(v) for v in doc["start_poses"]),
    )
