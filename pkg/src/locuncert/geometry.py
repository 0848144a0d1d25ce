"""Loudspeaker/listener geometry for a two-channel stereophonic setup.

Conventions used throughout the package:

* The listener look direction is the +y axis; +x points to the right.
* Azimuths are in radians, positive to the LEFT of the look direction.
  The left loudspeaker of a stereo pair therefore sits at +phi0/2.  This
  matches the level-difference sign convention (ICLD > 0 = left louder).
* ICTD = tau_R - tau_L, so ICTD > 0 means the left feed arrives earlier.
  A positive overlap delay tau_o makes both feeds coincide at the left ear.
* Times in seconds, distances in meters, levels in decibels.

The head is modeled as a sphere of radius ``head_radius`` centered at the
listener position, with the ears on the sphere at azimuths +-``ear_angle``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_SOUND = 343.0  # m/s, dry air at 20 C

# Method tags for relative_panning()
PRINTED_APPROXIMATION = "printed-approximation"
EXACT_PATH = "exact-path"

Point = tuple[float, float]


@dataclass(frozen=True)
class StereoSetup:
    """Symmetric stereo pair: full base angle, speaker distance from origin."""

    base_angle: float  # radians, full angle between the loudspeakers
    speaker_distance: float  # meters, from the sweet-spot origin
    speed_of_sound: float = SPEED_OF_SOUND

    def __post_init__(self):
        # The fully lateral pair (base angle pi) is a valid degenerate case.
        if not 0.0 < self.base_angle <= math.pi:
            raise ValueError(f"base_angle must be in (0, pi], got {self.base_angle}")
        if self.speaker_distance <= 0.0:
            raise ValueError("speaker_distance must be positive")
        if self.speed_of_sound <= 0.0:
            raise ValueError("speed_of_sound must be positive")


@dataclass(frozen=True)
class ListenerPose:
    """Listener position and head parameters. Look direction is always +y."""

    x: float = 0.0  # meters, + to the right
    y: float = 0.0  # meters, + toward the loudspeakers
    head_radius: float = 0.09
    ear_angle: float = math.radians(100.0)  # radians from look direction

    def __post_init__(self):
        if self.head_radius <= 0.0:
            raise ValueError("head_radius must be positive")
        if not math.pi / 2 <= self.ear_angle <= math.pi:
            raise ValueError("ear_angle must be within [pi/2, pi]")


@dataclass(frozen=True)
class SourcePlacement:
    """Direction and range of a point source in the listener frame."""

    azimuth: float  # radians, + left of look direction
    distance: float  # meters

    def __post_init__(self):
        if self.distance <= 0.0:
            raise ValueError("distance must be positive")
        if not -math.pi <= self.azimuth <= math.pi:
            raise ValueError("azimuth must be within [-pi, pi]")


@dataclass(frozen=True)
class PanningPoint:
    """Inter-channel offsets applied to the loudspeaker feeds."""

    ictd: float  # seconds, tau_R - tau_L
    icld: float  # dB, 20*log10(g_L/g_R)


@dataclass(frozen=True)
class RelativePanningPoint:
    """Panning point as effectively observed at an off-center position."""

    rictd: float  # seconds
    ricld: float  # dB
    method: str  # PRINTED_APPROXIMATION or EXACT_PATH


def loudspeaker_positions(setup: StereoSetup) -> tuple[Point, Point]:
    """World coordinates (x, y) of the (left, right) loudspeaker."""
    half = setup.base_angle / 2.0
    x = setup.speaker_distance * math.sin(half)
    y = setup.speaker_distance * math.cos(half)
    return (-x, y), (x, y)


def source_relative_to_listener(position: Point, pose: ListenerPose) -> SourcePlacement:
    """Azimuth/distance of a world-frame point as seen from the listener.

    The listener always looks along +y, so the azimuth is measured from +y,
    positive toward -x (left).
    """
    dx = position[0] - pose.x
    dy = position[1] - pose.y
    distance = math.hypot(dx, dy)
    if distance <= 0.0:
        raise ValueError("source coincides with the listener position")
    return SourcePlacement(azimuth=math.atan2(-dx, dy), distance=distance)


def tau_overlap(
    head_radius: float,
    ear_angle: float,
    base_angle: float,
    speed_of_sound: float = SPEED_OF_SOUND,
) -> float:
    """Inter-channel delay at which both feeds arrive together at the left ear.

    First-order closed form in head_radius; the right-ear case is the
    negative of this value by symmetry.  head_radius may be zero (point
    head), which gives zero.
    """
    if head_radius < 0.0:
        raise ValueError("head_radius must be non-negative")
    half = base_angle / 2.0
    bracket = math.cos(ear_angle - half) + half + ear_angle - math.pi / 2.0
    return head_radius / speed_of_sound * bracket


def exact_ear_paths(
    speaker_position: Point, pose: ListenerPose
) -> tuple[float, float]:
    """Acoustic path lengths (to_left_ear, to_right_ear) around a spherical head.

    Below the tangential-incidence angle theta_0 = arccos(rh/r) the path is
    the straight chord; beyond it the wave travels the tangent to the sphere,
    sqrt(r^2 - rh^2), plus the arc rh*(theta - theta_0).  The two branches
    meet continuously at theta_0.
    """
    dx = speaker_position[0] - pose.x
    dy = speaker_position[1] - pose.y
    r = math.hypot(dx, dy)
    if r <= pose.head_radius:
        raise ValueError("speaker lies inside the head sphere")
    source_azimuth = math.atan2(-dx, dy)
    theta_0 = math.acos(pose.head_radius / r)

    paths = []
    for ear_sign in (+1.0, -1.0):  # left ear, right ear
        incidence = abs(_wrap_angle(source_azimuth - ear_sign * pose.ear_angle))
        if incidence <= theta_0:
            d = math.sqrt(
                r * r
                + pose.head_radius * pose.head_radius
                - 2.0 * r * pose.head_radius * math.cos(incidence)
            )
        else:
            d = math.sqrt(r * r - pose.head_radius * pose.head_radius) + (
                pose.head_radius * (incidence - theta_0)
            )
        paths.append(d)
    return paths[0], paths[1]


def relative_panning(
    point: PanningPoint,
    pose: ListenerPose,
    setup: StereoSetup,
    method: str = EXACT_PATH,
) -> RelativePanningPoint:
    """Panning point as observed at (pose.x, pose.y) instead of the origin.

    ``printed-approximation`` evaluates the small-displacement closed forms
    verbatim; ``exact-path`` uses the exact point distances from the pose to
    the two loudspeakers (no head, consistent with the first-order
    derivation).  Both agree at x = 0.
    """
    c = setup.speed_of_sound
    if method == PRINTED_APPROXIMATION:
        half_sin = math.sin(setup.base_angle / 2.0)
        rictd = point.ictd - pose.x * (2.0 / c) * half_sin
        ricld = point.icld - (pose.x / setup.speaker_distance) * (
            20.0 * half_sin / math.log(10.0)
        )
    elif method == EXACT_PATH:
        left_pos, right_pos = loudspeaker_positions(setup)
        d_left = math.hypot(left_pos[0] - pose.x, left_pos[1] - pose.y)
        d_right = math.hypot(right_pos[0] - pose.x, right_pos[1] - pose.y)
        rictd = point.ictd + (d_right - d_left) / c
        ricld = point.icld + 20.0 * math.log10(d_right / d_left)
    else:
        raise ValueError(f"unknown method {method!r}")
    return RelativePanningPoint(rictd=rictd, ricld=ricld, method=method)


def x_for_full_shift(setup: StereoSetup) -> float:
    """Lateral displacement at which the relative ICTD shifts by 1 ms."""
    return 0.001 * setup.speed_of_sound / (2.0 * math.sin(setup.base_angle / 2.0))


def psr_distance_for_tau_overlap(
    head_radius: float, ear_angle: float, base_angle: float
) -> float:
    """Inter-microphone distance whose maximum ICTD equals the overlap delay."""
    half = base_angle / 2.0
    bracket = math.cos(ear_angle - half) + half + ear_angle - math.pi / 2.0
    return head_radius * bracket / math.sin(half)


def mic_radius_from_distance(distance: float, mic_base_angle: float) -> float:
    """Radius of the circle on which two mics separated by ``distance`` sit."""
    return distance / (2.0 * math.sin(mic_base_angle / 2.0))


def distance_from_mic_radius(mic_radius: float, mic_base_angle: float) -> float:
    """Inter-microphone distance for mics on a circle of ``mic_radius``."""
    return 2.0 * mic_radius * math.sin(mic_base_angle / 2.0)


def _wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
