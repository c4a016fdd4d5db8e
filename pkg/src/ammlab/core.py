"""Exact pricing primitives for constant-product pools and pool ecosystems.

A pool holds reserves ``(x, y)`` of two assets.  Three pricing rules are
implemented over a shared ecosystem of pools:

* local constant-product: output keeps ``x * y`` constant at the target pool;
* naive global: the constant-product formula applied to the *aggregate*
  reserves of all pools, capped at the target pool's holdings;
* global: the minimum of the two, which removes the naive rule's
  exploitability while never paying less than the local rule collects.

All operations are pure: ecosystems are immutable values and every state
transition returns a new one.  Quantities can be ``fractions.Fraction``
(exact, the reference semantics for invariant tests) or ``float`` (fast
path); each function preserves whichever flavor it is given.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union

Num = Union[int, float, Fraction]

SIDE_X = "X"
SIDE_Y = "Y"

DIVERGENT = "divergent"
CONVERGENT = "convergent"
OVERSHOOTING = "overshooting"

BRANCH_CPMM = "local-cpmm"
BRANCH_NGMM = "global-ngmm"


class DomainError(ValueError):
    """Inputs outside an operation's domain (nonpositive reserve, unknown pool, ...)."""


class ReserveDepletionError(RuntimeError):
    """A swap tried to pay out an entire reserve.

    Unreachable for the local and global rules (their output is strictly
    below the reserve); the naive global rule can hit it by design.
    """


class Algorithm(Enum):
    """Pricing rule selector."""

    CPMM = "cpmm"
    NGMM = "ngmm"  # demonstration/exploit use only, not a recommended configuration
    GMM = "gmm"
    GMM_REBAL = "gmm-rebal"

    @classmethod
    def parse(cls, token: str) -> "Algorithm":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise DomainError(f"unknown algorithm {token!r}") from None


@dataclass(frozen=True)
class PoolState:
    """Reserves of one pool.  Both sides must stay strictly positive."""

    pool_id: str
    x: Num
    y: Num

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise DomainError(
                f"pool {self.pool_id!r} requires strictly positive reserves, got ({self.x}, {self.y})"
            )

    @property
    def ratio(self) -> Num:
        """Marginal price of X in Y units (y / x), always recomputed."""
        return self.y / self.x

    @property
    def product(self) -> Num:
        return self.x * self.y

    def relabeled(self) -> "PoolState":
        """Same pool with the asset labels swapped."""
        return PoolState(self.pool_id, self.y, self.x)


@dataclass(frozen=True)
class Ecosystem:
    """Ordered collection of pools with unique ids."""

    pools: Tuple[PoolState, ...]

    def __post_init__(self):
        if not self.pools:
            raise DomainError("an ecosystem needs at least one pool")
        ids = [p.pool_id for p in self.pools]
        if len(set(ids)) != len(ids):
            raise DomainError(f"duplicate pool ids: {ids}")

    @classmethod
    def from_reserves(
        cls, pairs: Iterable[Tuple[Num, Num]], ids: Optional[Sequence[str]] = None
    ) -> "Ecosystem":
        pairs = list(pairs)
        if ids is None:
            ids = [f"amm{i + 1}" for i in range(len(pairs))]
        return cls(tuple(PoolState(pid, x, y) for pid, (x, y) in zip(ids, pairs)))

    def index_of(self, pool_id: str) -> int:
        for i, p in enumerate(self.pools):
            if p.pool_id == pool_id:
                return i
        raise DomainError(f"no pool {pool_id!r} in ecosystem")

    def pool(self, pool_id: str) -> PoolState:
        return self.pools[self.index_of(pool_id)]

    @property
    def total_x(self) -> Num:
        return sum(p.x for p in self.pools)

    @property
    def total_y(self) -> Num:
        return sum(p.y for p in self.pools)

    @property
    def ratio(self) -> Num:
        """Global marginal price of X in Y units."""
        return self.total_y / self.total_x

    def complement_x(self, pool_id: str) -> Num:
        return self.total_x - self.pool(pool_id).x

    def complement_y(self, pool_id: str) -> Num:
        return self.total_y - self.pool(pool_id).y

    def with_pool(self, pool: PoolState) -> "Ecosystem":
        idx = self.index_of(pool.pool_id)
        pools = list(self.pools)
        pools[idx] = pool
        return Ecosystem(tuple(pools))

    def relabeled(self) -> "Ecosystem":
        return Ecosystem(tuple(p.relabeled() for p in self.pools))


@dataclass(frozen=True)
class SwapOrder:
    """One order: send ``amount_in`` of ``side`` to ``pool_id``."""

    pool_id: str
    side: str
    amount_in: Num
    sender_tag: str = "trader"

    def __post_init__(self):
        if self.side not in (SIDE_X, SIDE_Y):
            raise DomainError(f"side must be {SIDE_X!r} or {SIDE_Y!r}, got {self.side!r}")
        if self.amount_in < 0:
            raise DomainError("amount_in must be nonnegative")


@dataclass(frozen=True)
class Quote:
    """Priced swap: output amount, the branch that produced it, and the
    divergent/convergent/overshooting label of the order."""

    amount_out: Num
    branch: str
    classification: str


def cpmm_out(dx: Num, x_i: Num, y_i: Num) -> Num:
    """Output of a constant-product swap sending ``dx`` against reserves ``(x_i, y_i)``.

    Exactly preserves ``x_i * y_i`` on the rational path; the result is
    always strictly below ``y_i``.
    """
    if not (x_i > 0 and y_i > 0):
        raise DomainError("reserves must be strictly positive")
    if dx < 0:
        raise DomainError("swap amount must be nonnegative")
    return y_i * dx / (x_i + dx)


def ngmm_out(dx: Num, eco: Ecosystem, pool_id: str) -> Num:
    """Naive global output: constant-product formula on aggregate reserves,
    capped at the target pool's holdings of the paid asset."""
    if dx < 0:
        raise DomainError("swap amount must be nonnegative")
    pool = eco.pool(pool_id)
    raw = eco.total_y * dx / (eco.total_x + dx)
    return raw if raw < pool.y else pool.y


def classify_swap(dx: Num, eco: Ecosystem, pool_id: str) -> str:
    """Label a send-X order as divergent, convergent or overshooting.

    Divergent: the target pool's ratio is at or below the rest of the
    ecosystem's, so the order pushes it further away.  Otherwise the order
    is convergent while the naive global output does not exceed the local
    one, and overshooting past that point.  A single-pool ecosystem is
    divergent by convention (aggregates coincide with the pool).
    """
    pool = eco.pool(pool_id)
    if len(eco.pools) == 1:
        return DIVERGENT
    comp_x = eco.complement_x(pool_id)
    comp_y = eco.complement_y(pool_id)
    # r_i <= r_rest, cross-multiplied (all positive)
    if pool.y * comp_x <= comp_y * pool.x:
        return DIVERGENT
    if ngmm_out(dx, eco, pool_id) <= cpmm_out(dx, pool.x, pool.y):
        return CONVERGENT
    return OVERSHOOTING


def gmm_out(dx: Num, eco: Ecosystem, pool_id: str) -> Quote:
    """Global quote: the lesser of the local and naive-global outputs.

    The branch is the naive-global one exactly when the order is
    convergent (ties classify convergent: the two prices coincide).
    """
    pool = eco.pool(pool_id)
    classification = classify_swap(dx, eco, pool_id)
    if classification == CONVERGENT:
        return Quote(ngmm_out(dx, eco, pool_id), BRANCH_NGMM, classification)
    return Quote(cpmm_out(dx, pool.x, pool.y), BRANCH_CPMM, classification)


def canonicalize_direction(order: SwapOrder, pool: PoolState) -> Tuple[SwapOrder, bool]:
    """Rewrite a send-Y order as a send-X order on the label-swapped pool.

    Returns ``(order, relabeled)``; the caller pairs a set flag with
    ``pool.relabeled()`` and un-relabels outputs.  Idempotent on send-X
    orders.
    """
    if order.side == SIDE_X:
        return order, False
    return replace(order, side=SIDE_X), True


def quote_order(eco: Ecosystem, order: SwapOrder, alg: Algorithm) -> Quote:
    """Price an order under ``alg`` without changing state.

    Send-Y orders are priced on the relabeled ecosystem; the scalar output
    needs no un-relabeling.
    """
    if alg is Algorithm.GMM_REBAL:
        raise DomainError("rebalancing quotes live in the rebalance module")
    work = eco if order.side == SIDE_X else eco.relabeled()
    dx = order.amount_in
    classification = classify_swap(dx, work, order.pool_id)
    if alg is Algorithm.GMM:
        return gmm_out(dx, work, order.pool_id)
    if alg is Algorithm.CPMM:
        pool = work.pool(order.pool_id)
        return Quote(cpmm_out(dx, pool.x, pool.y), BRANCH_CPMM, classification)
    if alg is Algorithm.NGMM:
        return Quote(ngmm_out(dx, work, order.pool_id), BRANCH_NGMM, classification)
    raise DomainError(f"unsupported algorithm {alg}")


def apply_swap(eco: Ecosystem, order: SwapOrder, alg: Algorithm) -> Tuple[Ecosystem, Num]:
    """Execute an order and return ``(new ecosystem, amount out)``.

    Only the target pool changes: the sent side grows by ``amount_in``, the
    received side shrinks by the output.  The input ecosystem is never
    mutated.  Paying out a full reserve raises ``ReserveDepletionError``
    (reachable only under the naive global rule).
    """
    if alg is Algorithm.GMM_REBAL:
        raise DomainError("apply rebalancing swaps via the rebalance module")
    if order.amount_in == 0:
        eco.index_of(order.pool_id)  # still validate the target
        return eco, 0
    if order.side == SIDE_Y:
        flipped, _ = canonicalize_direction(order, eco.pool(order.pool_id))
        new_eco, out = apply_swap(eco.relabeled(), flipped, alg)
        return new_eco.relabeled(), out
    out = quote_order(eco, order, alg).amount_out
    pool = eco.pool(order.pool_id)
    if out >= pool.y:
        raise ReserveDepletionError(
            f"swap would drain pool {order.pool_id!r}: out={out} >= reserve={pool.y}"
        )
    new_pool = PoolState(pool.pool_id, pool.x + order.amount_in, pool.y - out)
    return eco.with_pool(new_pool), out


def pool_value(pool: PoolState, price: Num) -> Num:
    """Value of the pool's holdings in Y units at ``price`` Y-per-X."""
    return pool.y + price * pool.x
