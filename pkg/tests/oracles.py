"""Reference computations the tests pin expected values against.

Everything here is built from first principles with stdlib arithmetic:
binomial and multinomial coefficients, explicit path enumeration, exact
Fraction bookkeeping, closed-form eigenvalues.  None of it shares code with
the package's convolution, dynamic-programming, or hull machinery, so an
agreement between the two is evidence, not tautology.

Window membership deliberately mirrors the package's float predicate
(|delta| / radius < 1) so that boundary atoms land on the same side in both
computations; the probability arithmetic is what stays independent.
"""

import itertools
import math
from fractions import Fraction

import numpy as np


def in_window(mean: float, x: float, radius: float) -> bool:
    """Same float membership rule as the box gauge with one radius."""
    return abs(mean - x) / radius < 1.0


# ---------------------------------------------------------------------------
# IID laws by combinatorics


def rademacher_sum_law(n: int):
    """{sum: probability} for n fair steps valued -1/+1, exact Fractions."""
    return {2 * j - n: Fraction(math.comb(n, j), 2 ** n)
            for j in range(n + 1)}


def rademacher_window_log_prob(n: int, x: float, radius: float) -> float:
    """log P(empirical mean within the open window), float predicate."""
    total = Fraction(0)
    for s, p in rademacher_sum_law(n).items():
        if in_window((float(s) / 1.0) / n, x, radius):
            total += p
    return math.log(total) if total else -math.inf


def iid_sum_law(atom_probs, n: int):
    """{scaled sum: prob} for n iid draws; atoms and probs are Fractions.

    atom_probs is a list of (Fraction atom, Fraction prob).  Returns keys
    scaled by the lcm of atom denominators, matching integer bookkeeping
    without sharing any code with it.
    """
    den = 1
    for a, _ in atom_probs:
        den = den * a.denominator // math.gcd(den, a.denominator)
    scaled = [(int(a * den), p) for a, p in atom_probs]
    law = {0: Fraction(1)}
    for _ in range(n):
        new = {}
        for key, p in law.items():
            for step, q in scaled:
                new[key + step] = new.get(key + step, Fraction(0)) + p * q
        law = new
    return den, law


def multinomial_three_atom_law(w_minus, w_zero, w_plus, n: int):
    """{sum: prob} for iid draws from {-1, 0, +1} by the multinomial formula."""
    law = {}
    for a in range(n + 1):          # count of -1
        for b in range(n - a + 1):  # count of 0
            c = n - a - b
            coef = Fraction(math.factorial(n),
                            math.factorial(a) * math.factorial(b)
                            * math.factorial(c))
            p = coef * w_minus ** a * w_zero ** b * w_plus ** c
            key = c - a
            law[key] = law.get(key, Fraction(0)) + p
    return law


# ---------------------------------------------------------------------------
# chains by path enumeration


def markov_path_law(P, atoms, start, n: int):
    """{sum value: probability} over all length-n paths, plain floats."""
    A = len(atoms)
    law = {}
    for path in itertools.product(range(A), repeat=n):
        p = start[path[0]]
        for u, v in zip(path, path[1:]):
            p *= P[u][v]
        s = sum(atoms[i] for i in path)
        law[s] = law.get(s, 0.0) + p
    return law


def markov_cylinder_prob(P, start, constraints: dict, n: int) -> float:
    """P(site i has an allowed state for every constrained i in [0, n))."""
    total = 0.0
    A = len(P)
    for path in itertools.product(range(A), repeat=n):
        if any(path[i] not in allowed for i, allowed in constraints.items()):
            continue
        p = start[path[0]]
        for u, v in zip(path, path[1:]):
            p *= P[u][v]
        total += p
    return total


def stationary_2x2(P):
    """pi = (P[1][0], P[0][1]) / (P[1][0] + P[0][1])."""
    denom = P[1][0] + P[0][1]
    return [P[1][0] / denom, P[0][1] / denom]


def perron_root_2x2(M):
    """Largest eigenvalue of a positive 2x2 matrix, closed form."""
    tr = M[0][0] + M[1][1]
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    return (tr + math.sqrt(tr * tr - 4.0 * det)) / 2.0


def tilted_chain_pressure(P, atoms, lam: float) -> float:
    """log of the Perron root of P[a][b] * exp(lam * atoms[b]) (2 states)."""
    M = [[P[a][b] * math.exp(lam * atoms[b]) for b in range(2)]
         for a in range(2)]
    return math.log(perron_root_2x2(M))


# ---------------------------------------------------------------------------
# block measures by direct enumeration


def conditioned_block_site_law(base_probs, keep):
    """Renormalized single-block site law {atom index: Fraction prob}."""
    kept = {i: base_probs[i] for i in keep}
    total = sum(kept.values())
    return {i: p / total for i, p in kept.items()}


def conditioned_box_sum_law(atoms, base_probs, block: int, keep, n: int):
    """{sum value: Fraction} for a side-n box of iid conditioned blocks.

    Full blocks are independent; the trailing partial block contributes its
    first n mod block coordinates.  Enumerates block assignments directly,
    so feasible only for small block and n.
    """
    site = conditioned_block_site_law(base_probs, keep)
    q, r = divmod(n, block)
    block_law = {}
    for assign in itertools.product(sorted(site), repeat=block):
        p = Fraction(1)
        for i in assign:
            p *= site[i]
        s = sum(atoms[i] for i in assign)
        block_law[s] = block_law.get(s, Fraction(0)) + p
    law = {Fraction(0): Fraction(1)}
    for _ in range(q):
        new = {}
        for k1, p1 in law.items():
            for k2, p2 in block_law.items():
                new[k1 + k2] = new.get(k1 + k2, Fraction(0)) + p1 * p2
        law = new
    if r:
        prefix = {}
        for assign in itertools.product(sorted(site), repeat=r):
            p = Fraction(1)
            for i in assign:
                p *= site[i]
            s = sum(atoms[i] for i in assign)
            prefix[s] = prefix.get(s, Fraction(0)) + p
        new = {}
        for k1, p1 in law.items():
            for k2, p2 in prefix.items():
                new[k1 + k2] = new.get(k1 + k2, Fraction(0)) + p1 * p2
        law = new
    return law


def iid_block_pressure(atoms, base_probs, block: int, keep, lam: float):
    """(1/j) log E[exp(lam * block sum)] for one conditioned block."""
    site = conditioned_block_site_law(base_probs, keep)
    total = 0.0
    for assign in itertools.product(sorted(site), repeat=block):
        p = 1.0
        s = 0.0
        for i in assign:
            p *= float(site[i])
            s += float(atoms[i])
        total += p * math.exp(lam * s)
    return math.log(total) / block


# ---------------------------------------------------------------------------
# convex analysis


def rate_function_pm1(x: float) -> float:
    """Closed-form conjugate of log cosh: the two-point entropy on [-1, 1]."""
    if abs(x) > 1.0:
        return math.inf
    if abs(x) == 1.0:
        return math.log(2.0)
    return ((1.0 + x) / 2.0 * math.log1p(x)
            + (1.0 - x) / 2.0 * math.log1p(-x))


def conjugate_brute(lams, vals, xs):
    """Direct quadratic supremum, plain python loops."""
    out = []
    for x in xs:
        best = -math.inf
        for lam, f in zip(lams, vals):
            if math.isfinite(f):
                best = max(best, lam * x - f)
        out.append(best)
    return np.array(out)


def gauge_bisect(contains_unit, y, hi: float = 1e9, iters: int = 200) -> float:
    """inf{t > 0 : y in t*V} by bisection on a unit-set membership oracle."""
    if all(abs(c) == 0.0 for c in np.atleast_1d(y)):
        return 0.0
    lo, hi_t = 0.0, float(hi)
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    for _ in range(iters):
        mid = 0.5 * (lo + hi_t)
        if mid == lo or mid == hi_t:
            break
        if contains_unit(arr / mid):
            hi_t = mid
        else:
            lo = mid
    return hi_t


# ---------------------------------------------------------------------------
# tiling by direct recount


def recount_tiling(n, m, g, ell, dim, sub_boxes, margin):
    """Recheck a tiling by sets: partition, alignment, pairwise distance."""
    all_sites = set(itertools.product(range(n), repeat=dim))
    covered = set()
    for corner, side in sub_boxes:
        box_sites = set(itertools.product(
            *[range(c, c + side) for c in corner]))
        if covered & box_sites:
            return False, "sub-boxes overlap"
        if any(c % ell for c in corner):
            return False, "corner off the sublattice"
        covered |= box_sites
    if covered | set(margin) != all_sites or covered & set(margin):
        return False, "margin does not complement the sub-boxes"
    boxes = list(sub_boxes)
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            d = _site_set_distance(boxes[i], boxes[j])
            if d <= g:
                return False, f"boxes {i},{j} at distance {d} <= g={g}"
    return True, "ok"


def _site_set_distance(a, b):
    (ca, sa), (cb, sb) = a, b
    best = None
    for p in itertools.product(*[range(c, c + sa) for c in ca]):
        for qq in itertools.product(*[range(c, c + sb) for c in cb]):
            d = max(abs(u - v) for u, v in zip(p, qq))
            best = d if best is None else min(best, d)
    return best
