"""In-network verification for the hash-based scheme.

A node keeps a buffer of verified packets. On arrival of a new packet it first
asks whether the buffer plus the newcomer decodes any source packet it has not
recovered yet; if so, the recovered blocks are checked against the traditional
digests, which costs one hash each instead of group exponentiations. Only when
nothing new is decodable (or decoding is disabled at this node) does it fall
back to the homomorphic group-hash test on the coded packet itself.

A packet failing either check is dropped and the buffer is left untouched. The
buffer is capped at buffer_factor * m packets, oldest evicted first; the set of
already-recovered positions survives eviction since those digests were checked
when the recovery happened.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field

from . import coding, hdl


class Decision(enum.Enum):
    ACCEPTED_TRADITIONAL = "accepted-traditional"
    ACCEPTED_HOMOMORPHIC = "accepted-homomorphic"
    ACCEPTED_UNCHECKED = "accepted-unchecked"
    DROPPED = "dropped"

    @property
    def accepted(self) -> bool:
        return self is not Decision.DROPPED


@dataclass
class VerifierState:
    """Per-node state: parameters, commitments, verified buffer, recoveries."""

    params: coding.GenerationParams
    pp: hdl.HdlParams
    commitments: hdl.Commitments
    decode_at_node: bool = True
    buffer_factor: int = 3
    buffer: list = dc_field(default_factory=list)
    recovered: set = dc_field(default_factory=set)

    @property
    def max_buffer(self) -> int:
        return self.buffer_factor * self.params.packet_count


def _new_recoveries(state: VerifierState, packet) -> dict:
    got = coding.decode(state.buffer + [packet], state.params)
    return {pos: blk for pos, blk in got.items() if pos not in state.recovered}


def receive_and_verify(state: VerifierState, packet) -> Decision:
    """Verify one incoming packet and update the node state."""
    f = state.params.field
    n = state.params.data_len
    if state.decode_at_node:
        fresh = _new_recoveries(state, packet)
        if fresh:
            # all newly exposed source packets must match their commitments;
            # otherwise the newcomer is what made corruption decodable
            for pos, blk in fresh.items():
                if coding.data_digest(blk[:n], f) != state.commitments.digest_at(pos):
                    return Decision.DROPPED
            _admit(state, packet)
            state.recovered.update(fresh)
            return Decision.ACCEPTED_TRADITIONAL
    ok = hdl.test(state.pp, packet.data(state.params), packet.aug(state.params),
                  state.commitments.hashes)
    if not ok:
        return Decision.DROPPED
    _admit(state, packet)
    return Decision.ACCEPTED_HOMOMORPHIC


def _admit(state: VerifierState, packet):
    state.buffer.append(packet)
    while len(state.buffer) > state.max_buffer:
        state.buffer.pop(0)
