from .bruteforce import (
    DEFAULT_BOUND,
    VisCycle,
    arbitration_edges,
    check_brute_force,
    linear_extensions,
    reads_from_candidates,
    required_vis_closure,
)
from .certificate import MalformedHistory, all_violations, certificates_from_trace, check_certificate
from .execution import AbstractExecution, Verdict, Violation, verify_execution
from .operational import OperationalSets, check_operational, operational_sets

__all__ = [
    "AbstractExecution",
    "DEFAULT_BOUND",
    "MalformedHistory",
    "OperationalSets",
    "Verdict",
    "Violation",
    "VisCycle",
    "all_violations",
    "arbitration_edges",
    "certificates_from_trace",
    "check_brute_force",
    "check_certificate",
    "check_operational",
    "linear_extensions",
    "operational_sets",
    "reads_from_candidates",
    "required_vis_closure",
    "verify_execution",
]
