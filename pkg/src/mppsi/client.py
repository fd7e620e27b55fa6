"""Per-database answer generation at client parties.

A database answers every query it received with a single field value: the
inner product of its incidence vector with the query vector, plus its local
and individual randomness slots for that query's partition, all multiplied
by the global multiplier. The answer echoes the query's (partition, target
position) tags so the leader can decode in any arrival order.

A database uses nothing beyond its own copy of the party's set, its own
randomness slots, and the queries delivered to it; the function signatures
here admit nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from .errors import ProtocolViolationError
from .field import FieldElement, PrimeField, inner_product
from .leader import QuerySpec
from .model import IncidenceVector, PartyProfile, Universe, to_incidence
from .randomness import RandomnessBundle


@dataclass(frozen=True)
class AnswerMsg:
    """One answer value, tagged for keyed (order-independent) decoding."""

    client_id: int
    database: int
    partition: int
    target_pos: Optional[int]
    value: FieldElement


def answer_value(ip: int, s: int, t: int, c: int, modulus: int) -> int:
    """The answer formula on raw residues: c * (ip + s + t) mod L."""
    return (c * (ip + s + t)) % modulus


def answer(
    x: Sequence[FieldElement],
    q: Sequence[FieldElement],
    s_slot: FieldElement,
    t_slot: FieldElement,
    c: FieldElement,
    field: PrimeField,
) -> FieldElement:
    """Answer one query: c * (<x, q> + s + t)."""
    if len(x) != len(q):
        raise ValueError(f"length mismatch: {len(x)} vs {len(q)}")
    if c.is_zero():
        raise ValueError("global multiplier must be nonzero")
    ip = inner_product(x, q)
    return field.element(
        answer_value(ip.value, s_slot.value, t_slot.value, c.value, field.modulus)
    )


def answer_all(
    profile: PartyProfile,
    database: int,
    queries: Sequence[QuerySpec],
    universe: Universe,
    bundle: RandomnessBundle,
    field: PrimeField,
) -> List[AnswerMsg]:
    """Answer every query delivered to one database, echoing its tags."""
    if bundle.c is None:
        raise ProtocolViolationError("global multiplier not installed")
    incidence: IncidenceVector = to_incidence(profile, universe)
    x = incidence.as_field_elements(field)
    answers: List[AnswerMsg] = []
    for query in queries:
        if query.client_id != profile.party_id or query.database != database:
            raise ProtocolViolationError(
                f"query addressed to ({query.client_id},{query.database}) "
                f"delivered to ({profile.party_id},{database})"
            )
        s_slot = bundle.local_slot(profile.party_id, query.partition)
        if query.target_pos is None:
            if database != 1:
                raise ProtocolViolationError(
                    f"bare base query delivered to database {database}"
                )
            t_slot = field.zero()
        else:
            t_slot = bundle.individual_slot(profile.party_id, database, query.partition)
        answers.append(
            AnswerMsg(
                client_id=profile.party_id,
                database=database,
                partition=query.partition,
                target_pos=query.target_pos,
                value=answer(x, query.vector, s_slot, t_slot, bundle.c, field),
            )
        )
    return answers
