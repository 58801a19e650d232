"""Skeleton layout and class-label definitions shared by the whole pipeline."""

from __future__ import annotations

import enum

NUM_JOINTS = 20
NUM_COORDS = 3
NUM_CLASSES = 4

# Joint order of the motion file format (joint-major CSV columns).
# Index 0 is Hips, the root used for spatial alignment.
JOINT_NAMES = (
    "Hips",
    "RightUpperLeg",
    "RightLeg",
    "RightFoot",
    "RightToes",
    "Spine",
    "Neck",
    "Head",
    "LeftShoulder",
    "LeftArm",
    "LeftForearm",
    "LeftHand",
    "RightShoulder",
    "RightArm",
    "RightForearm",
    "RightHand",
    "LeftUpperLeg",
    "LeftLeg",
    "LeftFoot",
    "LeftToes",
)

JOINT_INDEX = {name: i for i, name in enumerate(JOINT_NAMES)}

HIPS = JOINT_INDEX["Hips"]

# (left, right) joint index pairs; midline joints are Hips, Spine, Neck, Head.
LEFT_RIGHT_PAIRS = (
    (JOINT_INDEX["LeftUpperLeg"], JOINT_INDEX["RightUpperLeg"]),
    (JOINT_INDEX["LeftLeg"], JOINT_INDEX["RightLeg"]),
    (JOINT_INDEX["LeftFoot"], JOINT_INDEX["RightFoot"]),
    (JOINT_INDEX["LeftToes"], JOINT_INDEX["RightToes"]),
    (JOINT_INDEX["LeftShoulder"], JOINT_INDEX["RightShoulder"]),
    (JOINT_INDEX["LeftArm"], JOINT_INDEX["RightArm"]),
    (JOINT_INDEX["LeftForearm"], JOINT_INDEX["RightForearm"]),
    (JOINT_INDEX["LeftHand"], JOINT_INDEX["RightHand"]),
)

MIDLINE_JOINTS = (
    JOINT_INDEX["Hips"],
    JOINT_INDEX["Spine"],
    JOINT_INDEX["Neck"],
    JOINT_INDEX["Head"],
)

# Parent of each joint, for rendering the skeleton as a stick figure.
JOINT_PARENT = {
    "RightUpperLeg": "Hips",
    "RightLeg": "RightUpperLeg",
    "RightFoot": "RightLeg",
    "RightToes": "RightFoot",
    "Spine": "Hips",
    "Neck": "Spine",
    "Head": "Neck",
    "LeftShoulder": "Neck",
    "LeftArm": "LeftShoulder",
    "LeftForearm": "LeftArm",
    "LeftHand": "LeftForearm",
    "RightShoulder": "Neck",
    "RightArm": "RightShoulder",
    "RightForearm": "RightArm",
    "RightHand": "RightForearm",
    "LeftUpperLeg": "Hips",
    "LeftLeg": "LeftUpperLeg",
    "LeftFoot": "LeftLeg",
    "LeftToes": "LeftFoot",
}

SKELETON_EDGES = tuple(
    (JOINT_INDEX[child], JOINT_INDEX[parent]) for child, parent in JOINT_PARENT.items()
)

# Front-view (x, y) schematic pose in metres, used only for rendering
# joint-importance figures; +x is the subject's left.
REST_POSE_2D = {
    "Hips": (0.00, 1.00),
    "Spine": (0.00, 1.25),
    "Neck": (0.00, 1.45),
    "Head": (0.00, 1.62),
    "LeftShoulder": (0.20, 1.42),
    "LeftArm": (0.33, 1.18),
    "LeftForearm": (0.40, 0.95),
    "LeftHand": (0.46, 0.74),
    "RightShoulder": (-0.20, 1.42),
    "RightArm": (-0.33, 1.18),
    "RightForearm": (-0.40, 0.95),
    "RightHand": (-0.46, 0.74),
    "LeftUpperLeg": (0.10, 0.95),
    "LeftLeg": (0.12, 0.52),
    "LeftFoot": (0.13, 0.08),
    "LeftToes": (0.20, 0.02),
    "RightUpperLeg": (-0.10, 0.95),
    "RightLeg": (-0.12, 0.52),
    "RightFoot": (-0.13, 0.08),
    "RightToes": (-0.20, 0.02),
}


class ClassLabel(enum.IntEnum):
    """The four walking-motion classes, with stable 0..3 encoding."""

    HEALTHY = 0
    JOINT_PROBLEM = 1
    MUSCLE_WEAKNESS = 2
    NEUROLOGICAL_DEFECT = 3

    @property
    def manifest_name(self) -> str:
        return _LABEL_TO_NAME[self]

    @classmethod
    def from_manifest_name(cls, name: str) -> "ClassLabel":
        try:
            return _NAME_TO_LABEL[name]
        except KeyError:
            raise ValueError(f"unknown label string: {name!r}") from None


_LABEL_TO_NAME = {
    ClassLabel.HEALTHY: "healthy",
    ClassLabel.JOINT_PROBLEM: "joint_problem",
    ClassLabel.MUSCLE_WEAKNESS: "muscle_weakness",
    ClassLabel.NEUROLOGICAL_DEFECT: "neurological_defect",
}

_NAME_TO_LABEL = {name: label for label, name in _LABEL_TO_NAME.items()}

CLASS_MANIFEST_NAMES = tuple(_LABEL_TO_NAME[ClassLabel(i)] for i in range(NUM_CLASSES))

CLASS_DISPLAY_NAMES = {
    ClassLabel.HEALTHY: "Healthy",
    ClassLabel.JOINT_PROBLEM: "Joint Problem",
    ClassLabel.MUSCLE_WEAKNESS: "Muscle Weakness",
    ClassLabel.NEUROLOGICAL_DEFECT: "Neurological Defect",
}
