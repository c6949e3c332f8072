from .network import Activation, NetworkSpec, Weights, Gradient, initWeights, forward, forwardBatch, backward, \
                     backwardBatch, sgdStep, gradientNorm, clipGradient
from .utils import *
