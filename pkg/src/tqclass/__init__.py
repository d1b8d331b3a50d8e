"""Trainable quantum feature mappings, quantum-kernel SVMs, and
Grover-amplified multiclass readout on an exact statevector simulator."""

__version__ = "0.1.0"
