"""Desk-scale litter-collection robot stack.

Modules:
  geometry    rigid transforms and the pinhole camera model
  kinematics  chain description, forward kinematics, Jacobians
  ik          weighted multi-task differential IK over a box-constrained QP
  perception  bottle position/axis estimation from mask + depth
  locomotion  observation assembly, gait clock, and reward terms
  mission     primitive sequencing state machine and the bin linkage
  simulator   kinematic world with ray-cast depth rendering
  teleop      websocket operator endpoint
  cli         command-line entry point
"""

__version__ = "0.1.0"
