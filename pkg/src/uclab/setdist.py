"""Exact probability distributions over subsets of a small ground set [n].

Subsets are n-bit masks (bit i-1 set iff element i is in the set, elements
numbered 1..n).  An ExplicitSetDistribution stores the full table of 2^n
probabilities, so every quantity here - entropy, marginals, conditionals,
the union of two independent samples, KL divergence, chain-rule profiles -
is computed exactly up to floating point, with no sampling.

The union of independent samples is a convolution under the union
operation; it is evaluated in O(n 2^n) through the subset zeta transform
(zeta(P * Q) = zeta(P) zeta(Q) pointwise) rather than the quadratic
double sum.

A ProductMixture is a convex combination of product (independent
coordinate) distributions.  It stays symbolic, so entropy bounds remain
available at ground-set sizes where the explicit table would not fit: the
exact entropy is bracketed between the mixture's average conditional
entropy and that average plus the entropy of the mixing weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scalars import GOLDEN_THRESHOLD, PHI, binary_entropy, entropy_ratio_bound

# Explicit tables are capped here; beyond it only mixture bound arithmetic
# stays exact, and pretending otherwise would be dishonest about memory.
MAX_EXPLICIT_N = 24

# Probabilities below this are treated as exact zeros inside entropy and KL
# sums, so log() is never fed a denormal-or-zero value.
PROB_FLOOR = 1e-300

NORMALIZATION_TOL = 1e-12


def _masks(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > PROB_FLOOR
    out[pos] = p[pos] * np.log(p[pos])
    return out


@dataclass(frozen=True)
class ExplicitSetDistribution:
    """Full probability table over the 2^n subsets of [n]."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.n > MAX_EXPLICIT_N:
            raise ValueError(f"explicit tables are limited to n <= {MAX_EXPLICIT_N}")
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (1 << self.n,):
            raise ValueError(f"probs must have length 2^{self.n}")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("probabilities must sum to 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, n: int, mapping) -> "ExplicitSetDistribution":
        """Build from {mask: probability}; omitted masks get probability 0."""
        probs = np.zeros(1 << n)
        for mask, p in mapping.items():
            if not 0 <= mask < (1 << n):
                raise ValueError(f"mask {mask:#x} out of range for n={n}")
            probs[mask] = p
        return cls(n, probs)

    @classmethod
    def point_mass(cls, n: int, mask: int) -> "ExplicitSetDistribution":
        return cls.from_mapping(n, {mask: 1.0})

    @classmethod
    def uniform_on(cls, n: int, masks) -> "ExplicitSetDistribution":
        masks = list(masks)
        if not masks:
            raise ValueError("support must be nonempty")
        if len(set(masks)) != len(masks):
            raise ValueError("support masks must be distinct")
        return cls.from_mapping(n, {m: 1.0 / len(masks) for m in masks})

    def support(self) -> np.ndarray:
        return np.nonzero(self.probs > PROB_FLOOR)[0]

    def entropy(self) -> float:
        """Shannon entropy -sum p log p in nats."""
        return float(-_plogp(self.probs).sum())

    def marginal(self, i: int) -> float:
        """Probability that element i (1-based) lies in the sampled set."""
        self._check_element(i)
        bit = (_masks(self.n) >> (i - 1)) & 1
        return float(self.probs[bit == 1].sum())

    def marginals(self) -> np.ndarray:
        return np.array([self.marginal(i) for i in range(1, self.n + 1)])

    def conditional_prob(self, i: int, prefix: int) -> float:
        """Pr[i in A | the restriction of A to [i-1] equals prefix]."""
        self._check_element(i)
        low = (1 << (i - 1)) - 1
        if not 0 <= prefix <= low:
            raise ValueError("prefix must be a mask on the first i-1 elements")
        ms = _masks(self.n)
        sel = (ms & low) == prefix
        denom = float(self.probs[sel].sum())
        if denom <= PROB_FLOOR:
            raise ValueError("prefix has zero probability")
        num = float(self.probs[sel & (((ms >> (i - 1)) & 1) == 1)].sum())
        return min(max(num / denom, 0.0), 1.0)

    def chain_profile(self, order=None) -> np.ndarray:
        """Expected conditional entropy contributed by each element in turn.

        Entry k is the average of H(Pr[element in A | prefix]) over prefixes
        on the earlier elements; the entries sum to the total entropy by the
        chain rule.  `order` permutes the elements before decomposing
        (default: natural order 1..n).
        """
        probs = self.probs
        if order is not None:
            probs = _permute_bits(probs, self.n, order)
        ms = _masks(self.n)
        out = np.empty(self.n)
        for i in range(1, self.n + 1):
            low = (1 << (i - 1)) - 1
            pref = (ms & low).astype(np.int64)
            has = ((ms >> (i - 1)) & 1).astype(float)
            tot = np.bincount(pref, weights=probs, minlength=1 << (i - 1))
            win = np.bincount(pref, weights=probs * has, minlength=1 << (i - 1))
            pos = tot > PROB_FLOOR
            rates = np.clip(win[pos] / tot[pos], 0.0, 1.0)
            out[i - 1] = float(np.dot(tot[pos], binary_entropy(rates)))
        return out

    def save(self, path) -> None:
        save_distribution(self, path)

    def _check_element(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise ValueError(f"element index must be in 1..{self.n}")


def _permute_bits(probs: np.ndarray, n: int, order) -> np.ndarray:
    order = list(order)
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError("order must be a permutation of 1..n")
    ms = _masks(n)
    new_idx = np.zeros_like(ms)
    for k, elem in enumerate(order):
        new_idx |= ((ms >> (elem - 1)) & 1) << k
    out = np.zeros_like(probs)
    out[new_idx] = probs
    return out


def _subset_zeta(values: np.ndarray, n: int) -> np.ndarray:
    """In-place-style subset-sum transform: out[S] = sum over T subset of S."""
    t = values.copy().reshape((2,) * n)
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax] = 0
        hi[ax] = 1
        t[tuple(hi)] += t[tuple(lo)]
    return t.reshape(-1)


def _subset_mobius(values: np.ndarray, n: int) -> np.ndarray:
    t = values.copy().reshape((2,) * n)
    for ax in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[ax] = 0
        hi[ax] = 1
        t[tuple(hi)] -= t[tuple(lo)]
    return t.reshape(-1)


def union_of_independent(
    d1: ExplicitSetDistribution, d2: ExplicitSetDistribution
) -> ExplicitSetDistribution:
    """Distribution of S1 | S2 for independent S1 ~ d1, S2 ~ d2.

    Computed through the subset zeta transform in O(n 2^n).  The output is
    renormalized after clipping the tiny negative masses the inverse
    transform can produce; its marginal at every element equals
    union_prob of the input marginals.
    """
    if d1.n != d2.n:
        raise ValueError("distributions must share the same ground set size")
    n = d1.n
    z = _subset_zeta(d1.probs, n) * _subset_zeta(d2.probs, n)
    out = _subset_mobius(z, n)
    if out.min() < -1e-9:
        raise RuntimeError("union convolution produced significantly negative mass")
    out = np.clip(out, 0.0, None)
    out /= out.sum()
    return ExplicitSetDistribution(n, out)


def kl_divergence(p: ExplicitSetDistribution, q: ExplicitSetDistribution) -> float:
    """KL divergence sum P log(P/Q) in nats; +inf when P escapes Q's support.

    Nonnegative, and zero exactly when the two tables agree; tiny negative
    roundoff is clamped to zero.
    """
    if p.n != q.n:
        raise ValueError("distributions must share the same ground set size")
    mask = p.probs > PROB_FLOOR
    if np.any(q.probs[mask] <= PROB_FLOOR):
        return float("inf")
    pm = p.probs[mask]
    qm = q.probs[mask]
    val = float(np.dot(pm, np.log(pm) - np.log(qm)))
    return max(val, 0.0)


@dataclass(frozen=True)
class ProductMixture:
    """Convex combination of product distributions over subsets of [n].

    components is a sequence of (weight, inclusion) pairs: with probability
    `weight`, each element enters the set independently with probability
    `inclusion`.
    """

    n: int
    components: tuple

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("n must be a positive integer")
        comps = tuple((float(w), float(r)) for w, r in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        ws = np.array([w for w, _ in comps])
        rs = np.array([r for _, r in comps])
        if np.any(ws < 0.0) or not np.all(np.isfinite(ws)):
            raise ValueError("weights must be nonnegative and finite")
        if abs(ws.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights must sum to 1")
        if np.any(rs < 0.0) or np.any(rs > 1.0) or not np.all(np.isfinite(rs)):
            raise ValueError("inclusion probabilities must lie in [0, 1]")
        object.__setattr__(self, "components", comps)

    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    def inclusions(self) -> np.ndarray:
        return np.array([r for _, r in self.components])

    def marginal(self) -> float:
        """Inclusion probability of any single element (all elements alike)."""
        return float(np.dot(self.weights(), self.inclusions()))

    def save(self, path) -> None:
        save_mixture(self, path)


def mixture_entropy_bounds(m: ProductMixture) -> tuple:
    """(lower, upper) bracket on the exact entropy of the mixture.

    lower is the average conditional entropy sum_k w_k * n * H(r_k); upper
    adds the entropy of the mixing weights, so upper - lower <= log(K) for
    K components (log 2 for two).
    """
    ws = m.weights()
    lower = float(m.n * np.dot(ws, binary_entropy(m.inclusions())))
    upper = lower + float(-_plogp(ws).sum())
    return lower, upper


def expand_mixture(m: ProductMixture) -> ExplicitSetDistribution:
    """Exact 2^n table of the mixture (small n only)."""
    if m.n > MAX_EXPLICIT_N:
        raise ValueError(f"cannot expand a mixture beyond n = {MAX_EXPLICIT_N}")
    probs = np.zeros(1 << m.n)
    for w, r in m.components:
        probs += w * _product_table(m.n, r)
    probs /= probs.sum()
    return ExplicitSetDistribution(m.n, probs)


def _product_table(n: int, u: float) -> np.ndarray:
    table = np.ones(1)
    for _ in range(n):
        table = np.concatenate([table * (1.0 - u), table * u])
    return table


def product_bernoulli(n: int, u: float) -> ExplicitSetDistribution:
    """Each element included independently with probability u.

    Entropy is exactly n H(u); this is the equality case of the union
    entropy bound whenever u stays at or below the golden threshold.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    if n > MAX_EXPLICIT_N:
        raise ValueError(f"explicit tables are limited to n <= {MAX_EXPLICIT_N}")
    return ExplicitSetDistribution(n, _product_table(n, u))


def golden_threshold_mixture(u: float, n: int) -> ProductMixture:
    """Two-component mixture meeting the union entropy bound above the threshold.

    With probability (1 - u) * PHI each element is included independently
    with the golden-threshold probability; otherwise the set is all of [n].
    Requires u >= GOLDEN_THRESHOLD so the first weight stays in [0, 1];
    the mixture's per-element marginal is exactly u.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    w = (1.0 - u) * PHI
    if w > 1.0 + 1e-12:
        raise ValueError("u must be at least the golden threshold")
    w = min(w, 1.0)
    return ProductMixture(n, ((w, GOLDEN_THRESHOLD), (1.0 - w, 1.0)))


@dataclass(frozen=True)
class UnionBoundReport:
    """Outcome of checking H(A u B) >= bound(u) * H(A) on one distribution."""

    max_marginal: float
    lhs: float
    rhs: float
    slack: float
    ratio_bound: float


def union_entropy_check(d: ExplicitSetDistribution) -> UnionBoundReport:
    """Evaluate the union-entropy lower bound for two independent samples of d.

    lhs is the exact entropy of the union, rhs is the piecewise bound factor
    at the maximum marginal times the entropy of d, slack = lhs - rhs.
    Distributions whose maximum marginal is 0 or 1 are rejected: the bound
    factor degenerates there and the statement is vacuous.
    """
    u = float(d.marginals().max())
    if u <= 0.0 or u >= 1.0:
        raise ValueError("maximum marginal must lie strictly inside (0, 1)")
    lam = entropy_ratio_bound(u)
    lhs = union_of_independent(d, d).entropy()
    rhs = lam * d.entropy()
    return UnionBoundReport(
        max_marginal=u, lhs=lhs, rhs=rhs, slack=lhs - rhs, ratio_bound=lam
    )


def save_distribution(d: ExplicitSetDistribution, path) -> None:
    """Write `n=<int>` then one `mask_hex probability` line per nonzero mask."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={d.n}\n")
        for mask in d.support():
            fh.write(f"{int(mask):x} {d.probs[mask]:.17g}\n")


def load_distribution(path) -> ExplicitSetDistribution:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("distribution file must start with an n=<int> header")
    n = int(lines[0][2:])
    mapping = {}
    for ln in lines[1:]:
        tok = ln.split()
        if len(tok) != 2:
            raise ValueError(f"bad distribution line: {ln!r}")
        mapping[int(tok[0], 16)] = float(tok[1])
    return ExplicitSetDistribution.from_mapping(n, mapping)


def save_mixture(m: ProductMixture, path) -> None:
    """Write `n=<int>` then one `weight inclusion` line per component."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={m.n}\n")
        for w, r in m.components:
            fh.write(f"{w:.17g} {r:.17g}\n")


def load_mixture(path) -> ProductMixture:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("mixture file must start with an n=<int> header")
    n = int(lines[0][2:])
    comps = []
    for ln in lines[1:]:
        tok = ln.split()
        if len(tok) != 2:
            raise ValueError(f"bad mixture line: {ln!r}")
        comps.append((float(tok[0]), float(tok[1])))
    return ProductMixture(n, tuple(comps))
