"""Concrete lattice-field laws with exact finite-volume computations.

All models live on Z^d (d = 1 or 2) with a finite set of atoms in R^k
(k = 1 or 2) as single-site values.  Every model shares one atom index
space: value constraints are expressed as per-site sets of allowed atom
indices, sums are tracked on the exact integer lattice generated by the
atoms (coordinates scaled by a common denominator), and all masses are kept
in log space.

Model kinds
-----------
IIDField              independent identical sites
MarkovField           stationary chain on Z (d = 1), strictly positive rows
BlockField            i.i.d. blocks of side j carrying the base law
                      restricted to one block, optionally conditioned on a
                      subset of atoms at every block site
AffineImageField      sitewise image  sigma -> A sigma - y0  of a base model

BlockField realizes both the plain block-product construction and its
conditioned variant (keep=None vs an atom index subset).  Block models and
Markov chains are implemented for lattice dimension 1; IID models (and their
affine images) also support d = 2.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, ModelError
from .lattice import Box
from .convexsets import gauge
from .numerics import NEG_INF, logadd, logsumexp

DEFAULT_LAW_BUDGET = 500_000


# ---------------------------------------------------------------------------
# parameter tables


@dataclass(frozen=True)
class ParamTable:
    """Integer-keyed step table; lookups use the largest key <= n."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(sorted((int(k), float(v)) for k, v in self.entries))
        if not entries:
            raise ValueError("empty parameter table")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def constant(cls, value: float) -> "ParamTable":
        return cls(((1, float(value)),))

    def __call__(self, n: int) -> float:
        value = self.entries[0][1]
        for key, val in self.entries:
            if key <= n:
                value = val
            else:
                break
        return value


@dataclass(frozen=True)
class DecouplingParams:
    """Claimed decoupling certificate: gap g(n) and cost c(n) tables."""

    g: ParamTable
    c: ParamTable

    @classmethod
    def independent(cls) -> "DecouplingParams":
        return cls(ParamTable.constant(0.0), ParamTable.constant(0.0))

    def ratios(self, sides, dim: int = 1):
        """Diagnostic: g(n)/n and c(n)/n^d along a side schedule."""
        return {
            "g_over_n": [self.g(n) / n for n in sides],
            "c_over_volume": [self.c(n) / n ** dim for n in sides],
        }


@dataclass(frozen=True)
class LocalControlParams:
    """Claimed local-control certificate for one neighborhood shape."""

    t: float
    alpha: float

    def __post_init__(self):
        if not (self.t > 0 and 0 < self.alpha <= 1):
            raise ValueError(f"need t > 0 and alpha in (0, 1], got {self}")

    @property
    def log_beta(self) -> float:
        """log of the residual bound beta = exp(-t) * alpha."""
        return -self.t + math.log(self.alpha)


# ---------------------------------------------------------------------------
# value space


def _to_fraction_point(atom, k: int):
    if np.isscalar(atom):
        atom = (atom,)
    pt = tuple(Fraction(a) if not isinstance(a, Fraction) else a for a in atom)
    if len(pt) != k:
        raise ValueError(f"atom {atom} does not have dimension {k}")
    return pt


@dataclass(frozen=True)
class ValueSpace:
    """Finite single-site value space: distinct atoms in R^k, k in {1, 2}."""

    points: tuple
    labels: tuple

    @classmethod
    def from_atoms(cls, atoms, labels=None) -> "ValueSpace":
        atoms = list(atoms)
        if not atoms:
            raise ValueError("value space needs at least one atom")
        k = 1 if np.isscalar(atoms[0]) else len(atoms[0])
        if k not in (1, 2):
            raise ValueError(f"value dimension must be 1 or 2, got {k}")
        points = tuple(_to_fraction_point(a, k) for a in atoms)
        if len(set(points)) != len(points):
            raise ValueError("atoms must be distinct")
        if labels is None:
            labels = tuple(str(i) for i in range(len(points)))
        return cls(points, tuple(labels))

    @property
    def k(self) -> int:
        return len(self.points[0])

    def array(self) -> np.ndarray:
        return np.array([[float(c) for c in p] for p in self.points])


# ---------------------------------------------------------------------------
# exact sum laws (log-space dict arithmetic on scaled integer keys)


@dataclass(frozen=True)
class FiniteLaw:
    """Distribution of a site sum over a box; exact support, log masses."""

    keys: tuple          # integer tuples: sum * den
    den: int
    logp: np.ndarray
    count: int           # number of sites summed

    def sums(self) -> np.ndarray:
        return np.array(self.keys, dtype=float) / self.den

    def means(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("empty box has no empirical mean")
        return self.sums() / self.count

    def mean_fracs(self):
        d = self.den * self.count
        return [tuple(Fraction(x, d) for x in key) for key in self.keys]

    def total(self) -> float:
        """logsumexp of all masses; 0 up to float accumulation."""
        return logsumexp(self.logp)


def _law_from_dict(d: dict, den: int, count: int) -> FiniteLaw:
    keys = tuple(sorted(d.keys()))
    return FiniteLaw(keys, den, np.array([d[k] for k in keys]), count)


def _convolve(a: dict, b: dict, budget: int) -> dict:
    out = {}
    for ka, la in a.items():
        for kb, lb in b.items():
            key = tuple(x + y for x, y in zip(ka, kb))
            s = la + lb
            prev = out.get(key)
            out[key] = s if prev is None else logadd(prev, s)
        if len(out) > budget:
            raise BudgetExceededError(
                f"sum-law support exceeded budget {budget}")
    return out


def _pow_convolve(base: dict, q: int, zero_key, budget: int) -> dict:
    """q-fold convolution power by binary exponentiation."""
    result = {zero_key: 0.0}
    sq = base
    while q:
        if q & 1:
            result = _convolve(result, sq, budget)
        q >>= 1
        if q:
            sq = _convolve(sq, sq, budget)
    return result


# ---------------------------------------------------------------------------
# base class


class FieldModel:
    """Shared surface of the concrete lattice-field laws."""

    kind = "abstract"

    def __init__(self, space: ValueSpace, dim: int, invariance_step: int,
                 decoupling: DecouplingParams, budget: int = DEFAULT_LAW_BUDGET):
        if dim not in (1, 2):
            raise ValueError(f"lattice dimension must be 1 or 2, got {dim}")
        self.space = space
        self.dim = dim
        self.invariance_step = invariance_step
        self.decoupling = decoupling
        self.budget = budget
        self.atoms = space.array()               # (A, k) float
        self.atom_fracs = space.points
        dens = [f.denominator for p in space.points for f in p]
        self.den = math.lcm(*dens) if dens else 1
        self.atom_keys = tuple(
            tuple(int(f * self.den) for f in p) for p in space.points)
        self._zero_key = (0,) * space.k

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def n_atoms(self) -> int:
        return len(self.atom_fracs)

    def support_indices(self):
        return tuple(range(self.n_atoms))

    def allowed_in_scaled(self, shape, t: float):
        """Atom indices with gauge strictly below t (membership in t*V)."""
        return frozenset(
            i for i in self.support_indices()
            if gauge(shape, self.atoms[i]) < t)

    def allowed_in_nbhd(self, nbhd):
        return frozenset(
            i for i in self.support_indices()
            if nbhd.contains(self.atoms[i]))

    # interface implemented by subclasses
    def cylinder_log_prob(self, constraints) -> float:
        raise NotImplementedError

    def sum_law(self, n: int) -> FiniteLaw:
        raise NotImplementedError

    def sample_box(self, box: Box, rng) -> dict:
        raise NotImplementedError

    def local_control_certificate(self, shape) -> LocalControlParams:
        """Covering certificate: t just above the largest atom gauge, alpha 1.

        Valid for any bounded-support field: the site value always lies in
        t*V, so the conditional mass is one whatever the conditioning.
        """
        gmax = max(gauge(shape, self.atoms[i]) for i in self.support_indices())
        t = gmax * (1.0 + 1e-9) + 1e-12
        return LocalControlParams(t=t, alpha=1.0)

    def describe(self) -> str:
        raise NotImplementedError


def _normalize_site(site):
    """Accept int sites for d=1 and tuples otherwise."""
    if isinstance(site, tuple):
        return site
    return (int(site),)


# ---------------------------------------------------------------------------
# IID


class IIDField(FieldModel):
    """Product field: sites i.i.d. with the given atom weights."""

    kind = "iid"

    def __init__(self, space: ValueSpace, weights, dim: int = 1,
                 budget: int = DEFAULT_LAW_BUDGET):
        super().__init__(space, dim, 1, DecouplingParams.independent(), budget)
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.n_atoms,):
            raise ValueError(f"need {self.n_atoms} weights, got shape {w.shape}")
        if np.any(w <= 0):
            raise ValueError("atom weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        self.weights = w / w.sum()
        self.log_w = np.log(self.weights)
        self._law_cache = {}

    def cylinder_log_prob(self, constraints) -> float:
        total = 0.0
        for _, allowed in sorted(
                (( _normalize_site(s), a) for s, a in constraints.items())):
            total += logsumexp(self.log_w[sorted(allowed)])
        return total

    def _site_dict(self) -> dict:
        return {key: lw for key, lw in zip(self.atom_keys, self.log_w)}

    def _sum_dict(self, count: int) -> dict:
        if count in self._law_cache:
            return self._law_cache[count]
        done = [c for c in self._law_cache if c < count]
        if done:
            start = max(done)
            current = self._law_cache[start]
        else:
            start, current = 0, {self._zero_key: 0.0}
        site = self._site_dict()
        for c in range(start + 1, count + 1):
            current = _convolve(current, site, self.budget)
            self._law_cache[c] = current
        return current

    def sum_law(self, n: int) -> FiniteLaw:
        count = n ** self.dim
        return _law_from_dict(self._sum_dict(count), self.den, count)

    def sample_box(self, box: Box, rng) -> dict:
        sites = box.sites()
        idx = rng.choice(self.n_atoms, size=len(sites), p=self.weights)
        return {s: int(i) for s, i in zip(sites, idx)}

    def describe(self) -> str:
        return f"iid(atoms={self.n_atoms},k={self.k},d={self.dim})"


# ---------------------------------------------------------------------------
# Markov chain (d = 1)


def _stationary_distribution(P: np.ndarray) -> np.ndarray:
    A = P.shape[0]
    M = np.vstack([P.T - np.eye(A), np.ones((1, A))])
    b = np.zeros(A + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


class MarkovField(FieldModel):
    """Stationary finite chain on Z with strictly positive transition rows.

    The minimal transition entry delta is recorded; the default claimed
    decoupling certificate is gap 1 with constant cost -2*log(delta), and it
    is validated against matrix oracles in the verifiers rather than assumed.
    A non-stationary start is allowed for sampling demonstrations; law
    computations anchor the chain at the left edge of the requested box.
    """

    kind = "markov"

    def __init__(self, space: ValueSpace, transition, start=None,
                 budget: int = DEFAULT_LAW_BUDGET):
        P = np.asarray(transition, dtype=float)
        A = len(space.points)
        if P.shape != (A, A):
            raise ValueError(f"transition must be {A}x{A}, got {P.shape}")
        if np.any(P <= 0):
            raise ValueError("transition entries must be strictly positive "
                             "(Doeblin minorization)")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("transition rows must sum to 1")
        self.transition = P / P.sum(axis=1, keepdims=True)
        self.doeblin_delta = float(np.min(self.transition))
        delta_cost = -2.0 * math.log(self.doeblin_delta)
        super().__init__(space, 1, 1,
                         DecouplingParams(ParamTable.constant(1.0),
                                          ParamTable.constant(delta_cost)),
                         budget)
        self.stationary_start = start is None
        self.start = (_stationary_distribution(self.transition)
                      if start is None else np.asarray(start, dtype=float))
        if abs(self.start.sum() - 1.0) > 1e-9 or np.any(self.start < 0):
            raise ValueError("start distribution must be a probability vector")
        with np.errstate(divide="ignore"):
            self.log_T = np.log(self.transition)
            self.log_start = np.log(self.start)
        self._law_cache = {}
        self._dp_snapshots = {}

    def _log_matvec(self, v: np.ndarray) -> np.ndarray:
        """One chain step in log space: v'(b) = logsumexp_a v(a) + log P(a,b)."""
        return logsumexp(v[:, None] + self.log_T, axis=0)

    def cylinder_log_prob(self, constraints) -> float:
        items = sorted((_normalize_site(s)[0], frozenset(a))
                       for s, a in constraints.items())
        if not items:
            return 0.0
        masks = []
        for _, allowed in items:
            m = np.full(self.n_atoms, NEG_INF)
            m[sorted(allowed)] = 0.0
            masks.append(m)
        v = self.log_start + masks[0]
        prev = items[0][0]
        for (site, _), mask in zip(items[1:], masks[1:]):
            for _ in range(site - prev):
                v = self._log_matvec(v)
            v = v + mask
            prev = site
        return logsumexp(v)

    def _dp_step(self, dp: dict) -> dict:
        new = {}
        A = self.n_atoms
        for key, vec in dp.items():
            contrib = logsumexp(vec[:, None] + self.log_T, axis=0)
            for b in range(A):
                k2 = tuple(x + y for x, y in zip(key, self.atom_keys[b]))
                arr = new.get(k2)
                if arr is None:
                    arr = np.full(A, NEG_INF)
                    new[k2] = arr
                arr[b] = logadd(arr[b], contrib[b])
        if len(new) * A > self.budget:
            raise BudgetExceededError(
                f"chain sum-law state space exceeded budget {self.budget}")
        return new

    def sum_law(self, n: int) -> FiniteLaw:
        if n < 1:
            raise ValueError("volume side must be positive")
        if n in self._law_cache:
            return self._law_cache[n]
        done = [i for i in self._dp_snapshots if i <= n]
        if done:
            i = max(done)
            dp = self._dp_snapshots[i]
        else:
            i = 1
            dp = {}
            for a, key in enumerate(self.atom_keys):
                vec = np.full(self.n_atoms, NEG_INF)
                vec[a] = self.log_start[a]
                prev = dp.get(key)
                if prev is None:
                    dp[key] = vec
                else:  # unreachable for distinct atoms; kept for safety
                    dp[key] = np.logaddexp(prev, vec)
        while i < n:
            dp = self._dp_step(dp)
            i += 1
        self._dp_snapshots[n] = dp
        law = _law_from_dict({k: logsumexp(v) for k, v in dp.items()},
                             self.den, n)
        self._law_cache[n] = law
        return law

    def sample_box(self, box: Box, rng) -> dict:
        sites = box.sites()
        out = {}
        idx = int(rng.choice(self.n_atoms, p=self.start))
        out[sites[0]] = idx
        for s in sites[1:]:
            idx = int(rng.choice(self.n_atoms, p=self.transition[idx]))
            out[s] = idx
        return out

    def describe(self) -> str:
        return f"markov(atoms={self.n_atoms},delta={self.doeblin_delta:.3g})"


# ---------------------------------------------------------------------------
# block product / conditioned block product (d = 1)


class BlockField(FieldModel):
    """I.i.d. blocks of side j, each carrying the base law on one block.

    keep=None gives the plain block product (the base law restricted to one
    block, tensorized over the block partition of Z).  A non-empty ``keep``
    set of atom indices conditions every block site to take values in that
    set; the conditioning event must have positive mass.  The law is
    invariant under translations by j, and the claimed decoupling and
    local-control certificates of the base are carried over unchanged.
    """

    kind = "block"

    def __init__(self, base: FieldModel, block: int, keep=None):
        if base.dim != 1:
            raise ModelError("block models are implemented for d = 1 bases")
        if not isinstance(base, (IIDField, MarkovField)):
            raise ModelError(
                "block models need an IID or Markov base; apply affine maps "
                "to the block model instead")
        if block < 1:
            raise ValueError(f"block side must be positive, got {block}")
        super().__init__(base.space, 1, block, base.decoupling, base.budget)
        self.base = base
        self.block = block
        if keep is not None:
            keep = frozenset(int(i) for i in keep)
            if not keep:
                raise ModelError("conditioning set must be non-empty")
            if not keep <= set(range(base.n_atoms)):
                raise ModelError(f"keep indices {sorted(keep)} out of range")
            if keep == set(range(base.n_atoms)):
                keep = None  # conditioning on everything is no conditioning
        self.keep = keep
        self._keep_list = (sorted(keep) if keep is not None
                           else list(range(base.n_atoms)))
        self.log_mass = self._block_mass()
        if self.log_mass == NEG_INF:
            raise ModelError("conditioning event has zero mass")
        self._law_cache = {}
        self._block_law = None
        self._prefix_cache = {}

    def support_indices(self):
        return tuple(self._keep_list)

    @property
    def conditioned(self) -> bool:
        return self.keep is not None

    def _keep_mask_log(self) -> np.ndarray:
        m = np.full(self.n_atoms, NEG_INF)
        m[self._keep_list] = 0.0
        return m

    def _block_mass(self) -> float:
        if self.keep is None:
            return 0.0
        if isinstance(self.base, IIDField):
            nu = logsumexp(self.base.log_w[self._keep_list])
            return self.block * nu
        masks = [self._keep_mask_log()] * self.block
        return self._weighted_block_logsum(masks)

    def _weighted_block_logsum(self, log_weights) -> float:
        """log sum over block paths of start * transitions * per-site weights."""
        base = self.base
        v = base.log_start + log_weights[0]
        for w in log_weights[1:]:
            v = logsumexp(v[:, None] + base.log_T, axis=0) + w
        return logsumexp(v)

    def block_cylinder_log_prob(self, pos_constraints) -> float:
        """Conditional probability of per-position constraints in one block."""
        if isinstance(self.base, IIDField):
            total = 0.0
            nu = logsumexp(self.base.log_w[self._keep_list])
            for pos, allowed in sorted(pos_constraints.items()):
                inter = sorted(set(allowed) & set(self._keep_list))
                total += logsumexp(self.base.log_w[inter]) - nu
            return total
        masks = []
        for pos in range(self.block):
            allowed = pos_constraints.get(pos)
            if allowed is None:
                idx = self._keep_list
            else:
                idx = sorted(set(allowed) & set(self._keep_list))
            m = np.full(self.n_atoms, NEG_INF)
            m[idx] = 0.0
            masks.append(m)
        return self._weighted_block_logsum(masks) - self.log_mass

    def cylinder_log_prob(self, constraints) -> float:
        per_block = {}
        for site, allowed in constraints.items():
            x = _normalize_site(site)[0]
            b, pos = divmod(x, self.block)
            per_block.setdefault(b, {})[pos] = allowed
        return sum(self.block_cylinder_log_prob(c)
                   for _, c in sorted(per_block.items()))

    def _block_sum_dict(self) -> dict:
        if self._block_law is not None:
            return self._block_law
        if isinstance(self.base, IIDField):
            nu = logsumexp(self.base.log_w[self._keep_list])
            site = {self.atom_keys[i]: self.base.log_w[i] - nu
                    for i in self._keep_list}
            law = _pow_convolve(site, self.block, self._zero_key, self.budget)
        else:
            law = self._markov_masked_sum(self.block, weight_tail=False)
        self._block_law = law
        return law

    def _markov_masked_sum(self, s: int, weight_tail: bool) -> dict:
        """Sum law of the first s block positions under the conditioning.

        weight_tail adds the probability that the remaining block positions
        stay in the keep set, i.e. produces the conditioned prefix marginal.
        With s == block the tail is empty and this is the block sum law.
        """
        base = self.base
        A = self.n_atoms
        keep = self._keep_list
        dp = {}
        for a in keep:
            vec = dp.setdefault(self.atom_keys[a], np.full(A, NEG_INF))
            vec[a] = base.log_start[a]
        for _ in range(s - 1):
            new = {}
            for key, vec in dp.items():
                contrib = logsumexp(vec[:, None] + base.log_T, axis=0)
                for b in keep:
                    k2 = tuple(x + y for x, y in zip(key, self.atom_keys[b]))
                    arr = new.get(k2)
                    if arr is None:
                        arr = np.full(A, NEG_INF)
                        new[k2] = arr
                    arr[b] = logadd(arr[b], contrib[b])
            if len(new) * A > self.budget:
                raise BudgetExceededError("block law exceeded budget")
            dp = new
        log_tail = np.zeros(A)
        if weight_tail:
            keep_cols = np.full((A, A), NEG_INF)
            keep_cols[:, keep] = base.log_T[:, keep]
            for _ in range(self.block - s):
                log_tail = logsumexp(keep_cols + log_tail[None, :], axis=1)
        out = {}
        for key, vec in dp.items():
            out[key] = logsumexp(vec + log_tail) - self.log_mass
        return out

    def _prefix_dict(self, s: int) -> dict:
        if s == 0:
            return {self._zero_key: 0.0}
        if s in self._prefix_cache:
            return self._prefix_cache[s]
        if isinstance(self.base, IIDField):
            nu = logsumexp(self.base.log_w[self._keep_list])
            site = {self.atom_keys[i]: self.base.log_w[i] - nu
                    for i in self._keep_list}
            law = _pow_convolve(site, s, self._zero_key, self.budget)
        else:
            law = self._markov_masked_sum(s, weight_tail=True)
        self._prefix_cache[s] = law
        return law

    def sum_law(self, n: int) -> FiniteLaw:
        if n < 1:
            raise ValueError("volume side must be positive")
        if n in self._law_cache:
            return self._law_cache[n]
        q, s = divmod(n, self.block)
        law = _pow_convolve(self._block_sum_dict(), q, self._zero_key,
                            self.budget)
        law = _convolve(law, self._prefix_dict(s), self.budget)
        out = _law_from_dict(law, self.den, n)
        self._law_cache[n] = out
        return out

    def block_log_mgf(self, lam) -> float:
        """log E[exp<lam, block sum>] for one conditioned block."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        tilts = self.atoms @ lam
        if isinstance(self.base, IIDField):
            per_site = logsumexp(self.base.log_w[self._keep_list]
                                 + tilts[self._keep_list])
            nu = logsumexp(self.base.log_w[self._keep_list])
            return self.block * (per_site - nu)
        mask = self._keep_mask_log()
        weights = [mask + tilts] * self.block
        return self._weighted_block_logsum(weights) - self.log_mass

    def sample_box(self, box: Box, rng) -> dict:
        lo = box.corner[0]
        hi = lo + box.side
        out = {}
        first_block = lo // self.block
        last_block = (hi - 1) // self.block
        for b in range(first_block, last_block + 1):
            path = self._sample_block(rng)
            for pos, idx in enumerate(path):
                site = b * self.block + pos
                if lo <= site < hi:
                    out[(site,)] = idx
        return out

    def _sample_block(self, rng):
        if isinstance(self.base, IIDField):
            w = self.base.weights[self._keep_list]
            w = w / w.sum()
            picks = rng.choice(len(self._keep_list), size=self.block, p=w)
            return [self._keep_list[i] for i in picks]
        base = self.base
        keep = self._keep_list
        A = self.n_atoms
        # G[t][a] = P(positions t+1..block-1 all in keep | X_t = a), normalized
        G = [None] * self.block
        g = np.ones(A)
        G[self.block - 1] = g
        for t in range(self.block - 2, -1, -1):
            g = base.transition[:, keep] @ g[keep]
            g = g / g.max()
            G[t] = g
        path = []
        w = base.start[keep] * G[0][keep]
        idx = keep[int(rng.choice(len(keep), p=w / w.sum()))]
        path.append(idx)
        for t in range(1, self.block):
            w = base.transition[idx, keep] * G[t][keep]
            idx = keep[int(rng.choice(len(keep), p=w / w.sum()))]
            path.append(idx)
        return path

    def describe(self) -> str:
        tag = "conditioned" if self.conditioned else "product"
        extra = f",|K|={len(self._keep_list)}" if self.conditioned else ""
        return f"{tag}(base={self.base.kind},j={self.block}{extra})"


# ---------------------------------------------------------------------------
# affine image


class AffineImageField(FieldModel):
    """Sitewise affine image  sigma -> A sigma - y0  of a base model.

    The atom index structure is untouched, so cylinder probabilities and
    sampling delegate to the base; only the value geometry changes.  The
    claimed decoupling certificate is inherited unchanged.  Image atoms may
    collide when A is not injective on the base atoms; laws merge masses.
    """

    kind = "affine"

    def __init__(self, base: FieldModel, matrix, offset=None):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if A.shape[1] != base.k:
            raise ValueError(f"matrix columns {A.shape[1]} != base k {base.k}")
        k_new = A.shape[0]
        if k_new not in (1, 2):
            raise ValueError(f"image dimension must be 1 or 2, got {k_new}")
        if np.linalg.matrix_rank(A) < k_new:
            raise ValueError("matrix must have full row rank")
        y0 = (np.zeros(k_new) if offset is None
              else np.atleast_1d(np.asarray(offset, dtype=float)))
        if y0.shape != (k_new,):
            raise ValueError(f"offset must have shape ({k_new},)")
        self._A_frac = [[Fraction(A[i, j]) for j in range(A.shape[1])]
                        for i in range(k_new)]
        self._y0_frac = [Fraction(v) for v in y0]
        new_points = []
        for p in base.atom_fracs:
            new_points.append(tuple(
                sum(self._A_frac[i][j] * p[j] for j in range(base.k))
                - self._y0_frac[i] for i in range(k_new)))
        labels = tuple(f"f({lab})" for lab in base.space.labels)
        space = ValueSpace(tuple(new_points), labels)  # duplicates allowed here
        self.base = base
        self.matrix = A
        self.offset = y0
        # bypass ValueSpace distinctness: build fields directly
        self.space = space
        self.dim = base.dim
        self.invariance_step = base.invariance_step
        self.decoupling = base.decoupling
        self.budget = base.budget
        self.atoms = np.array([[float(c) for c in p] for p in new_points])
        self.atom_fracs = tuple(new_points)
        dens = [f.denominator for p in new_points for f in p]
        dens += [f.denominator for f in self._y0_frac]
        self.den = math.lcm(*dens)
        self.atom_keys = tuple(tuple(int(f * self.den) for f in p)
                               for p in new_points)
        self._zero_key = (0,) * k_new

    @property
    def k(self) -> int:
        return len(self._y0_frac)

    @property
    def n_atoms(self) -> int:
        return len(self.atom_fracs)

    def support_indices(self):
        return self.base.support_indices()

    def cylinder_log_prob(self, constraints) -> float:
        return self.base.cylinder_log_prob(constraints)

    def sum_law(self, n: int) -> FiniteLaw:
        base_law = self.base.sum_law(n)
        count = base_law.count
        out = {}
        bden = base_law.den
        for key, lp in zip(base_law.keys, base_law.logp):
            s = [Fraction(x, bden) for x in key]
            img = tuple(
                sum(self._A_frac[i][j] * s[j] for j in range(self.base.k))
                - count * self._y0_frac[i] for i in range(self.k))
            ikey = tuple(int(f * self.den) for f in img)
            for f, x in zip(img, ikey):
                if f * self.den != x:
                    raise AssertionError("affine image key not integral")
            prev = out.get(ikey)
            out[ikey] = float(lp) if prev is None else logadd(prev, float(lp))
        return _law_from_dict(out, self.den, count)

    def sample_box(self, box: Box, rng) -> dict:
        return self.base.sample_box(box, rng)

    def local_control_certificate(self, shape, rule: str = "canonical"):
        """Covering certificate, or the composed linear+offset pushforward rule.

        rule="composed" uses t(V) = max base-atom gauge of the preimage values
        plus the gauge of the offset; for symmetric shapes this dominates the
        canonical covering value and keeps alpha = 1.
        """
        if rule == "canonical":
            return FieldModel.local_control_certificate(self, shape)
        if rule != "composed":
            raise ValueError(f"unknown rule {rule!r}")
        linear_images = self.atoms + self.offset[None, :]
        gmax = max(gauge(shape, v) for v in linear_images)
        t_linear = gmax * (1.0 + 1e-9) + 1e-12
        return LocalControlParams(t=t_linear + gauge(shape, self.offset),
                                  alpha=1.0)

    def describe(self) -> str:
        return f"affine(base={self.base.describe()},k={self.k})"


# ---------------------------------------------------------------------------
# factories and shared operations


def iid_field(atoms, weights, dim: int = 1, labels=None) -> IIDField:
    return IIDField(ValueSpace.from_atoms(atoms, labels), weights, dim)


def markov_field(atoms, transition, start=None, labels=None) -> MarkovField:
    return MarkovField(ValueSpace.from_atoms(atoms, labels), transition, start)


def product_of_marginals(base: FieldModel, block: int) -> BlockField:
    return BlockField(base, block, keep=None)


def conditioned(base: FieldModel, block: int, keep) -> BlockField:
    return BlockField(base, block, keep=frozenset(keep))


def affine_image(base: FieldModel, matrix, offset=None) -> AffineImageField:
    return AffineImageField(base, matrix, offset)


def scalarize(model: FieldModel, lam) -> FieldModel:
    """Scalar field <lam, sigma>; identity shortcut for k = 1, lam = 1."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if model.k == 1 and lam.shape == (1,) and lam[0] == 1.0:
        return model
    return AffineImageField(model, lam.reshape(1, -1))


def mean_law_exact(model: FieldModel, n: int) -> FiniteLaw:
    """Exact law of the empirical mean over the side-n box (as a sum law).

    The returned FiniteLaw carries the sum support; use .means() for the
    empirical-mean support points.  Raises BudgetExceededError when the
    dynamic program grows past the model budget.
    """
    return model.sum_law(n)


def sample(model: FieldModel, box: Box, seed) -> dict:
    """Draw one configuration on the box; deterministic in (model, box, seed)."""
    rng = np.random.default_rng(seed) if not isinstance(
        seed, np.random.Generator) else seed
    if box.dim != model.dim:
        raise ValueError(f"box dim {box.dim} != model dim {model.dim}")
    return model.sample_box(box, rng)
