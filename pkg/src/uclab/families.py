"""Union-closed families of subsets of a small ground set.

A family is a nonempty collection of distinct subset masks.  This module
checks union-closedness, computes union closures, enumerates every
union-closed family on ground sets of up to four elements (the candidate
space 2^(2^n) is still only 65536 there), finds the most frequent element,
and runs the entropy diagnostics that connect families to set
distributions: for A, B independent uniform samples from a union-closed F,
the union A u B stays inside F, so H(A u B) <= log|F| = H(A).

Enumeration encodes a family as an integer whose bit s indicates that
subset-mask s is a member; families are produced in increasing order of
that encoding, which fixes a canonical, reproducible stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .scalars import GOLDEN_THRESHOLD, entropy_ratio_bound
from .setdist import ExplicitSetDistribution, union_of_independent

MAX_ENUMERATION_N = 4
MARGINAL_ONE_TOL = 1e-12


@dataclass(frozen=True)
class Family:
    """Nonempty family of distinct subsets of [n], stored as sorted masks."""

    n: int
    sets: tuple

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("n must be a positive integer")
        sets = tuple(int(s) for s in self.sets)
        if not sets:
            raise ValueError("family must be nonempty")
        if any(not 0 <= s < (1 << self.n) for s in sets):
            raise ValueError("set masks out of range")
        if any(a >= b for a, b in zip(sets, sets[1:])):
            raise ValueError("set masks must be strictly increasing")
        object.__setattr__(self, "sets", sets)

    @classmethod
    def of(cls, n: int, masks) -> "Family":
        return cls(n, tuple(sorted(set(int(m) for m in masks))))

    def size(self) -> int:
        return len(self.sets)

    def save(self, path) -> None:
        save_family(self, path)


def is_union_closed(f: Family) -> bool:
    """True iff the union of every pair of members is again a member."""
    members = set(f.sets)
    sets = f.sets
    for i, a in enumerate(sets):
        for b in sets[i:]:
            if (a | b) not in members:
                return False
    return True


def union_closure(f: Family) -> Family:
    """Smallest union-closed family containing f (idempotent, monotone)."""
    closed = set(f.sets)
    frontier = list(closed)
    while frontier:
        fresh = []
        for a in frontier:
            for b in closed.copy():
                u = a | b
                if u not in closed:
                    closed.add(u)
                    fresh.append(u)
        frontier = fresh
    return Family.of(f.n, closed)


@dataclass(frozen=True)
class FrequencyReport:
    """Per-element membership counts plus the most frequent element."""

    counts: tuple
    best_element: int
    best_proportion: float
    degenerate: bool


def max_element_frequency(f: Family) -> FrequencyReport:
    """Count how many member sets contain each element; ties go to the
    smallest element index.  A family whose only member is the empty set
    has best proportion 0 and is flagged degenerate."""
    counts = [0] * f.n
    for s in f.sets:
        for i in range(f.n):
            if (s >> i) & 1:
                counts[i] += 1
    best_idx = max(range(f.n), key=lambda i: (counts[i], -i))
    best = counts[best_idx] / len(f.sets)
    return FrequencyReport(
        counts=tuple(counts),
        best_element=best_idx + 1,
        best_proportion=best,
        degenerate=max(counts) == 0,
    )


def _union_closed_family_codes(n: int) -> np.ndarray:
    """All nonempty union-closed families on [n], as increasing bit codes."""
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"exhaustive enumeration is limited to n <= {MAX_ENUMERATION_N}")
    p = 1 << n
    codes = np.arange(1, 1 << p, dtype=np.uint32)
    ok = np.ones(codes.size, dtype=bool)
    for a in range(p):
        for b in range(a + 1, p):
            u = a | b
            if u == a or u == b:
                continue
            both = ((codes >> a) & (codes >> b) & 1).astype(bool)
            missing = ((codes >> u) & 1) == 0
            ok &= ~(both & missing)
    return codes[ok]


def enumerate_union_closed(n: int) -> Iterator[Family]:
    """Yield every nonempty union-closed family on [n] exactly once,
    ordered by the integer encoding of the membership bit vector."""
    for code in _union_closed_family_codes(n):
        masks = [s for s in range(1 << n) if (int(code) >> s) & 1]
        yield Family(n, tuple(masks))


def count_union_closed(n: int) -> int:
    return int(_union_closed_family_codes(n).size)


@dataclass(frozen=True)
class FrequencyScanReport:
    """Exhaustive minimum of the best element proportion over all
    nonempty union-closed families on [n] (the all-{empty-set} family is
    excluded and counted separately)."""

    n: int
    families_checked: int
    degenerate_excluded: int
    min_best_proportion: float
    witness: Family
    threshold: float
    passed: bool


def verify_frequency_threshold(n: int) -> FrequencyScanReport:
    """Scan every nonempty union-closed family on [n] and verify that some
    element appears in at least a golden-threshold proportion of the sets.

    The family {empty set} is excluded: no element appears at all there, so
    the claim fails vacuously for it; it is reported, not scanned.
    """
    codes = _union_closed_family_codes(n)
    p = 1 << n
    sizes = np.bitwise_count(codes).astype(np.int64)
    best = np.zeros(codes.size, dtype=np.int64)
    for i in range(n):
        elem_mask = np.uint32(sum(1 << s for s in range(p) if (s >> i) & 1))
        best = np.maximum(best, np.bitwise_count(codes & elem_mask).astype(np.int64))
    degenerate = codes == 1  # the family containing only the empty set
    keep = ~degenerate
    props = best[keep] / sizes[keep]
    idx = int(np.argmin(props))
    witness_code = int(codes[keep][idx])
    witness = Family(n, tuple(s for s in range(p) if (witness_code >> s) & 1))
    min_prop = float(props[idx])
    return FrequencyScanReport(
        n=n,
        families_checked=int(keep.sum()),
        degenerate_excluded=int(degenerate.sum()),
        min_best_proportion=min_prop,
        witness=witness,
        threshold=GOLDEN_THRESHOLD,
        passed=min_prop >= GOLDEN_THRESHOLD,
    )


@dataclass(frozen=True)
class EntropyDiagnostics:
    """Entropy comparison for uniform independent samples from a
    union-closed family, with the per-element chain decomposition."""

    family_size: int
    entropy: float
    union_entropy: float
    entropy_drop_ok: bool
    max_marginal: float
    ratio_bound: float
    step_slacks: tuple
    skipped_elements: tuple
    min_step_slack: float


def entropy_chain_diagnostics(f: Family, tol: float = 1e-9) -> EntropyDiagnostics:
    """Exact entropy diagnostics for a union-closed family (n <= 12).

    Builds the uniform distribution on f, checks that the union of two
    independent samples cannot beat the uniform entropy log|F|, and
    decomposes both entropies element by element, reporting the slack of
    the per-step inequality

        H(union chain step) >= bound(u) * H(single-sample chain step)

    with u the largest marginal below 1.  Elements contained in every
    member are skipped: both chain entries vanish there and the bound
    factor degenerates.
    """
    if f.n > 12:
        raise ValueError("entropy diagnostics are limited to n <= 12")
    if not is_union_closed(f):
        raise ValueError("family is not union-closed")
    d = ExplicitSetDistribution.uniform_on(f.n, f.sets)
    u_dist = union_of_independent(d, d)
    h_a = d.entropy()
    h_u = u_dist.entropy()
    marg = d.marginals()
    active = [i for i in range(f.n) if marg[i] < 1.0 - MARGINAL_ONE_TOL]
    skipped = tuple(i + 1 for i in range(f.n) if i not in active)
    if active and max(marg[active]) > 0.0:
        u = float(max(marg[active]))
        lam = entropy_ratio_bound(u)
        chain_a = d.chain_profile()
        chain_u = u_dist.chain_profile()
        slacks = tuple(float(chain_u[i] - lam * chain_a[i]) for i in active)
    else:
        u = 0.0 if not active else float(max(marg[active]))
        lam = float("nan")
        slacks = ()
    return EntropyDiagnostics(
        family_size=f.size(),
        entropy=h_a,
        union_entropy=h_u,
        entropy_drop_ok=h_u <= h_a + 1e-12,
        max_marginal=u if active else 1.0,
        ratio_bound=lam,
        step_slacks=slacks,
        skipped_elements=skipped,
        min_step_slack=min(slacks) if slacks else 0.0,
    )


def save_family(f: Family, path) -> None:
    """Write `n=<int>` then one hex mask per line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={f.n}\n")
        for s in f.sets:
            fh.write(f"{s:x}\n")


def load_family(path) -> Family:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("family file must start with an n=<int> header")
    n = int(lines[0][2:])
    return Family.of(n, (int(ln, 16) for ln in lines[1:]))
