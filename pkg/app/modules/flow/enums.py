from enum import Enum


class FlowKind(str, Enum):
    SMALL = "small"
    LARGE = "large"
