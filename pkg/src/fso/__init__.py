"""Fractal social organizations: nested service-oriented communities whose
engines match, notify and bind actors to service requests, escalating
unresolved roles up the hierarchy into social overlay networks."""
from .engine import CapacityLedger, SocialComputingEngine, Trace
from .enrollment import Escalation, LocalOutcome, Organization, Son
from .registry import (
    Advertisement,
    EngagementPolicy,
    Event,
    RequestState,
    RequestTemplate,
    RoleDescriptor,
    RoleProtocol,
    ServiceRequest,
    match,
    on_event,
    role,
)
from .topology import Fso, FsoError, build_fso, escalation_path, level_set, parent

__version__ = "0.1.0"
