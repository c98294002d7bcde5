"""Prime fields F_p sized so every computation stays exact in int64.

Scalars are plain Python ints in [0, p); bulk data lives in numpy int64
arrays reduced mod p.  The modulus is capped below 2**31 so a product of
two reduced values always fits in int64, and helpers here know how many
such products may be accumulated before a reduction is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputError

MAX_MODULUS = 2**31


def is_prime(n: int) -> bool:
    """Deterministic primality test by trial division (n < 2**31)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@lru_cache(maxsize=None)
def prime_factors(n: int) -> tuple[int, ...]:
    """Distinct prime divisors of n, ascending."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class PrimeField:
    """F_p together with the group exponent it was chosen to serve.

    The invariant p == 1 (mod exponent_served) guarantees that F_p contains
    a primitive m-th root of unity for every m dividing exponent_served, and
    that p divides no group order whose exponent divides exponent_served.
    """

    p: int
    exponent_served: int = 1

    def __post_init__(self):
        if not (2 <= self.p < MAX_MODULUS):
            raise InputError(f"modulus {self.p} out of range [2, 2^31)")
        if not is_prime(self.p):
            raise InputError(f"modulus {self.p} is not prime")
        if self.exponent_served < 1 or (self.p - 1) % self.exponent_served:
            raise InputError(
                f"p={self.p} is not 1 mod exponent {self.exponent_served}"
            )

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse mod {self.p}")
        return pow(a, self.p - 2, self.p)

    def reduce(self, arr) -> np.ndarray:
        return np.asarray(arr, dtype=np.int64) % self.p

    @property
    def add_capacity(self) -> int:
        """How many products of reduced values may be summed in int64."""
        return max(1, (2**62) // ((self.p - 1) ** 2))

    def matmul(self, a, b) -> np.ndarray:
        """Exact modular matrix product, chunking the inner dimension."""
        a = self.reduce(a)
        b = self.reduce(b)
        inner = a.shape[-1]
        cap = self.add_capacity
        if inner <= cap:
            return (a @ b) % self.p
        acc = np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
        for lo in range(0, inner, cap):
            acc = (acc + a[..., lo : lo + cap] @ b[lo : lo + cap]) % self.p
        return acc


def choose_splitting_prime(group_exponent: int, floor: int = 2) -> PrimeField:
    """Smallest prime p >= floor with p == 1 (mod group_exponent)."""
    if group_exponent < 1:
        raise InputError("group exponent must be positive")
    if floor < 2:
        raise InputError("floor must be at least 2")
    cand = max(floor, 2)
    m = group_exponent
    if m > 1:
        rem = (1 - cand) % m
        cand += rem
        if cand < floor:
            cand += m
    step = m if m > 1 else 1
    while cand < MAX_MODULUS:
        if is_prime(cand):
            return PrimeField(cand, exponent_served=m)
        cand += step
    raise InputError(
        f"no prime p == 1 mod {m} with {floor} <= p < 2^31; exponent too large"
    )


def default_field(group) -> PrimeField:
    """Field policy used throughout: p > max(256, |G|) keeps degree counts exact."""
    return choose_splitting_prime(group.exponent, max(257, group.order + 1))


def multiplicative_order(field: PrimeField, a: int) -> int:
    a %= field.p
    if a == 0:
        raise InputError("0 has no multiplicative order")
    order = field.p - 1
    for q in prime_factors(field.p - 1):
        while order % q == 0 and pow(a, order // q, field.p) == 1:
            order //= q
    return order


def primitive_root_of_unity(field: PrimeField, m: int) -> int:
    """Smallest residue of multiplicative order exactly m in F_p.

    Requires m | p-1.  All order-m elements are w^j with gcd(j, m) = 1 for
    any one of them, so the minimum is taken over those phi(m) candidates.
    """
    p = field.p
    if m < 1 or (p - 1) % m:
        raise InputError(f"no primitive {m}-th root of unity in F_{p}: m must divide {p - 1}")
    if m == 1:
        return 1
    gen = None
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in prime_factors(p - 1)):
            gen = g
            break
    if gen is None:  # p == 2 only, and then m == 1 was handled above
        raise InputError(f"F_{p} has no generator serving m={m}")
    w = pow(gen, (p - 1) // m, p)
    best = min(pow(w, j, p) for j in range(1, m) if math.gcd(j, m) == 1)
    if pow(best, m, p) != 1 or any(pow(best, m // q, p) == 1 for q in prime_factors(m)):
        raise InputError(f"order verification failed for root of unity m={m}, p={p}")
    return best
