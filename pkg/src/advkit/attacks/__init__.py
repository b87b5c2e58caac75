from .base import AttackResult, EvasionAttack
from .fast_gradient import FastGradientMethod
from .iterative import BasicIterativeMethod, ProjectedGradientDescent, least_likely_targets
from .saliency_map import SaliencyMapMethod
from .carlini import CarliniL2Method, CarliniLInfMethod
from .deepfool import DeepFool
from .universal import UniversalPerturbation
from .newtonfool import NewtonFool
from .virtual_adversarial import VirtualAdversarialMethod
from .spatial import SpatialTransformation
from .boundary import BoundaryAttack

__all__ = [
    "AttackResult",
    "EvasionAttack",
    "FastGradientMethod",
    "BasicIterativeMethod",
    "ProjectedGradientDescent",
    "least_likely_targets",
    "SaliencyMapMethod",
    "CarliniL2Method",
    "CarliniLInfMethod",
    "DeepFool",
    "UniversalPerturbation",
    "NewtonFool",
    "VirtualAdversarialMethod",
    "SpatialTransformation",
    "BoundaryAttack",
]
