"""Per-run mutable world: directed balances, depletion tests, and the fee rule."""

from __future__ import annotations

from dataclasses import dataclass

from .ingest import DirectedChannelEdge, SnapshotGraph
from .seeds import SeedPath, as_seed_path, channel_key

MSAT_PER_SAT = 1_000
PPM = 1_000_000

_BALANCE_STREAM = 0


@dataclass(frozen=True)
class SimParams:
    """Experiment knobs; defaults reproduce the calibrated daily-traffic setting."""

    tau: int = 7_000
    amount_sat: int = 60_000
    merchant_ratio: float = 0.8
    runs: int = 10
    seed: int = 0
    ignore_depletion: bool = False
    count_last_hop_fee: bool = False
    max_hops: int = 20

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.amount_sat <= 0:
            raise ValueError("amount_sat must be positive")
        if not 0.0 <= self.merchant_ratio <= 1.0:
            raise ValueError("merchant_ratio must lie in [0, 1]")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.max_hops < 1:
            raise ValueError("max_hops must be at least 1")


def edge_fee(policy, amount_sat: int) -> int:
    """Forwarding charge in msat: base fee plus the proportional part, floored.

    Exact integer arithmetic: floor(rate_ppm * amount_msat / 1e6) reduces to
    (rate_ppm * amount_sat) // 1000.
    """
    if amount_sat <= 0:
        raise ValueError("amount_sat must be positive")
    return policy.base_fee_msat + (policy.fee_rate_ppm * amount_sat) // MSAT_PER_SAT


class BalanceState:
    """Spendable satoshis per channel direction, keyed by (channel_id, src node).

    The two directions of a channel always sum to its capacity. With
    ignore_depletion set, capacity checks pass unconditionally and balances
    may go negative; the conservation identity still holds.
    """

    __slots__ = ("ignore_depletion", "_bal")

    def __init__(self, balances: dict[tuple[str, str], int], ignore_depletion: bool = False):
        self._bal = balances
        self.ignore_depletion = ignore_depletion

    def balance(self, channel_id: str, src: str) -> int:
        return self._bal[(channel_id, src)]

    def can_send(self, edge: DirectedChannelEdge, amount_sat: int) -> bool:
        return self.ignore_depletion or self._bal[(edge.channel_id, edge.src)] >= amount_sat

    def items(self):
        return self._bal.items()

    def total(self) -> int:
        return sum(self._bal.values())

    def copy(self) -> "BalanceState":
        return BalanceState(dict(self._bal), self.ignore_depletion)


def init_balances(
    graph: SnapshotGraph,
    seed: SeedPath | int,
    *,
    ignore_depletion: bool = False,
) -> BalanceState:
    """Split every channel's capacity uniformly at random between its endpoints.

    Each channel draws from its own seed stream keyed by a digest of the
    channel id, so a channel's initial split is independent of which other
    channels exist. Removal studies therefore see identical starting
    balances on all surviving channels.
    """
    root = as_seed_path(seed).child(_BALANCE_STREAM)
    balances: dict[tuple[str, str], int] = {}
    for cid, (a, b) in graph.channel_endpoints.items():
        cap = graph.channel_capacity[cid]
        rng = root.child(*channel_key(cid)).generator()
        fwd = int(rng.integers(0, cap + 1))
        balances[(cid, a)] = fwd
        balances[(cid, b)] = cap - fwd
    return BalanceState(balances, ignore_depletion)


def usable(state: BalanceState, edge: DirectedChannelEdge, amount_sat: int) -> bool:
    """True iff the edge direction can carry the amount (or depletion is ignored)."""
    return state.can_send(edge, amount_sat)


def apply_payment(state: BalanceState, path: tuple[DirectedChannelEdge, ...], amount_sat: int) -> None:
    """Move the amount along the path: forward balances down, reverse up.

    Fees are accounting-only and never touch balances. Driving a balance
    negative with depletion enforced is a caller bug, not a payment failure.
    """
    bal = state._bal
    for edge in path:
        fwd = (edge.channel_id, edge.src)
        rev = (edge.channel_id, edge.trg)
        remaining = bal[fwd] - amount_sat
        if remaining < 0 and not state.ignore_depletion:
            raise RuntimeError(
                f"contract violation: channel {edge.channel_id} direction {edge.src}->{edge.trg}"
                f" holds {bal[fwd]} sat, cannot send {amount_sat}"
            )
        bal[fwd] = remaining
        bal[rev] += amount_sat
