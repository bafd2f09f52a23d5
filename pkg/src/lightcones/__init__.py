"""Simulation and certification lab for quantum information propagation
under power-law (1/r^alpha) interactions.

Modules
-------
lattice    hypercubic geometry, Manhattan metric, power-law envelope
spin       exact spin-1/2 dynamics, operators, projectors, OTOC weights
protocols  fast operator-spreading, connected correlators, GHZ transfer
walk       operator-quantum-walk certificates and right-frontier bounds
free       single-particle dynamics on large lattices, tail bounds
transfer   single-particle state-transfer plans and robustness Monte Carlo
boson      early-time classical boson sampler and exact few-boson oracle
bounds     closed-form evaluators for every analytic propagation bound
cli        reproducible experiment runner emitting CSV + JSON metadata
"""

__version__ = "0.1.0"
