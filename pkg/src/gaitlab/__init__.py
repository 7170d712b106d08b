"""Synthetic foot-IMU gait data, ZUPT navigation and a numpy CNN for stride length."""
from .types import Foot, GaitParameters, GaitType, ImuSample, ImuTrial, StrideAnnotation

__version__ = "0.1.0"

__all__ = ["Foot", "GaitParameters", "GaitType", "ImuSample", "ImuTrial", "StrideAnnotation"]
