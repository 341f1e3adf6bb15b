"""qfill: a desk-scale lab for bond-RFQ fill-probability modelling.

The package covers the full loop on synthetic data: event generation,
angle preprocessing, a simulated projected quantum feature map built on a
Heisenberg-interaction ansatz (dense statevector and MPS backends),
classical-quantum event matching, from-scratch learners with grid-search
cross-validation, and a walk-forward blinded backtest.
"""

__version__ = "0.1.0"
