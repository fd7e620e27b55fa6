"""Transport-free protocol engine.

Runs a complete session as pure function calls: leader election (or
override), partition planning, randomness setup, query generation, answer
collection, and decoding. The in-memory and networked transports both dress
this engine in messages; the audit module drives it directly under
enumerated randomness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .client import AnswerMsg, answer_all
from .errors import InfeasibleError
from .field import PrimeField, select_field_size
from .leader import (
    CostTable,
    IntersectionResult,
    PartitionPlan,
    QueryPlan,
    cost_table,
    decode,
    generate_queries,
    make_partition_plan,
)
from .model import PartyProfile, Universe, validate_profiles
from .randomness import FAITHFUL, RandomnessBundle, RandomnessPolicy, ShareMessage, build_bundle


@dataclass(frozen=True)
class SessionSetup:
    """Everything fixed before any value is drawn."""

    field: PrimeField
    leader: PartyProfile
    clients: Tuple[PartyProfile, ...]
    costs: CostTable


def prepare_session(
    profiles: Sequence[PartyProfile],
    universe: Universe,
    leader_override: Optional[int] = None,
) -> SessionSetup:
    """Elect (or accept) the leader and check feasibility."""
    validate_profiles(profiles, universe)
    if len(profiles) < 2:
        raise InfeasibleError(f"need at least 2 parties, got {len(profiles)}")
    table = cost_table(profiles)
    if leader_override is not None:
        if leader_override not in table.costs:
            raise InfeasibleError(f"leader override names unknown party {leader_override}")
        if table.costs[leader_override] is None:
            raise InfeasibleError(
                f"party {leader_override} cannot lead: some counterpart has one database"
            )
        leader_id = leader_override
    else:
        leader_id = table.best()
    by_id = {p.party_id: p for p in profiles}
    leader = by_id[leader_id]
    clients = tuple(sorted(
        (p for p in profiles if p.party_id != leader_id), key=lambda p: p.party_id
    ))
    return SessionSetup(
        field=select_field_size(len(profiles)),
        leader=leader,
        clients=clients,
        costs=table,
    )


def collect_answers(
    plan: PartitionPlan,
    query_plan: QueryPlan,
    clients: Sequence[PartyProfile],
    universe: Universe,
    bundle: RandomnessBundle,
    field: PrimeField,
) -> List[AnswerMsg]:
    """Every database answers exactly the queries delivered to it."""
    answers: List[AnswerMsg] = []
    for client in sorted(clients, key=lambda p: p.party_id):
        for database in range(1, plan.used_databases[client.party_id] + 1):
            delivered = query_plan.queries_for(client.party_id, database)
            answers.extend(
                answer_all(client, database, delivered, universe, bundle, field)
            )
    return answers


@dataclass(frozen=True)
class ProtocolRun:
    """One full run: plan, drawn values, traffic, and decoded result."""

    setup: SessionSetup
    plan: Optional[PartitionPlan]
    query_plan: Optional[QueryPlan]
    bundle: Optional[RandomnessBundle]
    share_messages: Tuple[ShareMessage, ...]
    answers: Tuple[AnswerMsg, ...]
    result: IntersectionResult


def run_protocol(
    profiles: Sequence[PartyProfile],
    universe: Universe,
    seed: int,
    leader_override: Optional[int] = None,
    policy: RandomnessPolicy = FAITHFUL,
) -> ProtocolRun:
    """Run a complete session in memory, without any transport dressing.

    An empty leader set short-circuits: the intersection is necessarily
    empty, so nothing is drawn and nothing is exchanged.
    """
    setup = prepare_session(profiles, universe, leader_override)
    if not setup.leader.data_set:
        empty = IntersectionResult(
            decoded=frozenset(), indicators={}, download_cost_actual=0
        )
        return ProtocolRun(
            setup=setup,
            plan=None,
            query_plan=None,
            bundle=None,
            share_messages=(),
            answers=(),
            result=empty,
        )
    plan = make_partition_plan(setup.leader, setup.clients)
    bundle, share_messages = build_bundle(plan, setup.clients, setup.field, seed, policy)
    query_plan = generate_queries(plan, setup.field, universe, seed)
    answers = collect_answers(plan, query_plan, setup.clients, universe, bundle, setup.field)
    result = decode(plan, answers, setup.field)
    return ProtocolRun(
        setup=setup,
        plan=plan,
        query_plan=query_plan,
        bundle=bundle,
        share_messages=tuple(share_messages),
        answers=tuple(answers),
        result=result,
    )
