"""UAV virtual-antenna-array simulator and multi-objective trajectory optimizer.

A swarm of rotary-wing UAVs acts as one distributed antenna (collaborative
beamforming) serving a moving ground user under interference from a
non-associated base station.  The package simulates the link physics, flight
energy and user mobility, and searches the rate/energy trade-off with an
evolutionary multi-objective PPO driver that maintains an external Pareto
archive.
"""

__version__ = "0.1.0"
