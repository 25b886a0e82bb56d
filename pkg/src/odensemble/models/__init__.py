from .bubble import BubblePhysical, bubble_coefficients, bubble_system, keller_miksis_plain, keller_miksis_rhs
from .duffing import (
    DuffingParams,
    duffing_lyapunov_rhs,
    duffing_lyapunov_system,
    duffing_maxima_system,
    duffing_rhs,
    duffing_system,
    lyapunov_accumulate,
)
from .valve import ValveParams, valve_events, valve_impact_action, valve_rhs, valve_system
