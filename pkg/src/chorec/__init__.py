"""Minimal Choreographies: a choreography calculus, its process-network target,
EndPoint Projection with amendment, and a compiler from partial recursive
functions."""

from .choreography import (
    Action,
    Call,
    Com,
    Cond,
    Def,
    END,
    End,
    Expr,
    Label,
    ProcState,
    Sel,
    annotate_calls,
    exit_points,
    inc,
    parse_choreography,
    print_choreography,
    proc_names,
    seq_compose,
    validate_choreography,
)
from .correspondence import CorrespondenceReport, check_correspondence
from .network import Network, net_enabled, net_run, net_step, parse_network, print_network
from .projection import amend, epp, merge, project_behaviour, prunes_to
from .recfun import (
    FUEL_EXHAUSTED,
    encode,
    encode_parallel,
    implement_function,
    oracle_eval,
    parse_recfun,
    pi,
)
from .semantics import (
    Termination,
    check_parallel_run,
    decide_termination_condfree,
    enabled_redexes,
    explore,
    run,
    step,
)
from .trace import Exhaustive, Leftmost, Outcome, Random, Trace

__version__ = "0.1.0"
