"""Toolkit for a discrete-time stochastic process algebra with deterministic
multiactions: parsing, step operational semantics, Petri-box denotational
semantics, consistency checking and exact Markov-chain analysis."""

from .activities import (Action, Activity, Deterministic, Leaf, Multiaction,
                         PairNum, RelabelMap, Stochastic, content,
                         sync_activities, sync_multiactions)
from .boxes import DtsdBox, box_of_static
from .errors import (AnalysisError, BudgetExceededError, DtsdError, InternalError,
                     NotRegularError, ParseError, StampedInputError, UnsafeNetError)
from .iso import IsoMismatch, IsoWitness, find_iso, verify_witness
from .lts import EMPTY_STEP, Lts, Tag
from .markov import (ChainModel, SojournVectors, chain_structure, dtmc, edtmc,
                     evaluate_index, rdtmc, smc_pmf, smc_pmf_via_dtmc,
                     smc_pmf_via_rdtmc, sojourn, steady_state,
                     timer_free_aggregate, transient)
from .nets import (NetState, build_rg, check_safe_clean, fire, fireable,
                   mark_final, mark_initial)
from .parser import parse_static
from .semantics import (DEFAULT_BUDGET, StateSpace, build_ts, can_steps,
                        enabled_sets, equivalence_class, now_steps, saturate,
                        timer_decrement)
from .syntax import (Act, Bar, Choice, DynExpr, Iter, Par, Relabel, Restrict,
                     Seq, StaticExpr, Sync, activity_sets, check_regular,
                     enumerate_activities, overline, print_expr, strip_timers,
                     underline)

__all__ = [name for name in dir() if not name.startswith("_")]
