"""Gate fidelities and topological-protection thresholds for MBQC on thermal cluster states."""

__version__ = "0.1.0"
