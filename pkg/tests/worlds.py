"""Shared world builders for the test suite."""

from btrecovery import config
from btrecovery import world as wd

LEFT, RIGHT = "left", "right"


def make_world(peg_holder=LEFT, obstacles=(), noise_std=0.0):
    arms = {
        LEFT: wd.Arm(id=LEFT, ee=wd.Pose(0.35, -0.10, 0.15)),
        RIGHT: wd.Arm(id=RIGHT, ee=wd.Pose(0.20, -0.30, 0.15)),
    }
    if peg_holder == LEFT:
        arm = arms[LEFT]
        arm.gripper = wd.GripperState.CLOSED
        arm.held = wd.PEG
        peg = wd.Peg(x=arm.ee.x, y=arm.ee.y, tip_z=arm.ee.z - config.PEG_LENGTH,
                     holder=LEFT)
    else:
        peg = wd.Peg(x=0.15, y=-0.35, tip_z=0.0, holder=wd.TABLE)
    world = wd.WorldState(
        arms=arms, peg=peg, hole=wd.HoleBlock(x=0.50, y=0.00),
        obstacles=list(obstacles), hole_noise_std=noise_std,
        start_poses=(wd.Pose(0.35, -0.10, 0.15), wd.Pose(0.35, 0.10, 0.15),
                     wd.Pose(0.30, 0.00, 0.17), wd.Pose(0.40, -0.14, 0.13),
                     wd.Pose(0.40, 0.14, 0.13)),
    )
    world.min_peg_lateral = wd.peg_lateral_error(world)
    return world


def light_blocker(x=0.50, y=0.00):
    return wd.Obstacle(id="blocker", kind=wd.ObstacleKind.LIGHT,
                       footprint_radius=0.015, x=x, y=y, z=config.BLOCK_TOP_Z)


def heavy_blocker(x=0.50, y=0.00, threshold=15.0):
    return wd.Obstacle(id="blocker", kind=wd.ObstacleKind.HEAVY,
                       footprint_radius=0.020, x=x, y=y, z=config.BLOCK_TOP_Z,
                       push_threshold=threshold)


def at_approach(world, arm=LEFT):
    app = wd.approach_pose(world)
    a = world.arm(arm)
    a.ee.x, a.ee.y, a.ee.z = app.x, app.y, app.z
    wd._sync_held(world, a)
    return world
