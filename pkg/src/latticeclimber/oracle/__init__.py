"""
Oracle module for latticeclimber.

Exhaustive ground truth for small mixtures: region membership, lattice
enumeration and certification of attack outcomes.
"""

from .lattice import (
    Certificate,
    LatticeReport,
    OracleSettings,
    RegionStatus,
    certify,
    enumerate_lattice,
    grid_membership,
    membership,
    report_from_dict,
    report_to_dict,
)

__all__ = [
    "Certificate",
    "LatticeReport",
    "OracleSettings",
    "RegionStatus",
    "certify",
    "enumerate_lattice",
    "grid_membership",
    "membership",
    "report_from_dict",
    "report_to_dict",
]
