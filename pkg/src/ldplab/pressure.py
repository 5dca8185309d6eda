"""Finite-volume and limit pressures, with structural checks.

The pressure of a model at tilt lam over the side-n box is

    (1 / n^d) log E[ exp <lam, sum of site values> ],

computed exactly from the model's sum law in log space.  Limit pressures
use the closed form for each model kind (atomwise for IID, Perron root of
the tilted transfer matrix for chains, per-block moment generating
function for block models, base pressure at the pulled-back tilt for
affine images).  At lam = 0 every pressure is exactly 0 and the code
returns that value without touching floating point sums.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .lattice import tile
from .models import (AffineImageField, BlockField, FieldModel, IIDField,
                     MarkovField, scalarize)
from .numerics import logsumexp
from .reports import VerificationReport


def _as_tilt(model: FieldModel, lam) -> np.ndarray:
    v = np.atleast_1d(np.asarray(lam, dtype=float))
    if v.shape != (model.k,):
        raise ValueError(f"tilt must have shape ({model.k},), got {v.shape}")
    return v


def pressure_finite(model: FieldModel, n: int, lam) -> float:
    """Exact pressure over the side-n box."""
    v = _as_tilt(model, lam)
    if not np.any(v):
        return 0.0
    law = model.sum_law(n)
    return float(logsumexp(law.logp + law.sums() @ v)) / law.count


def pressure_mc(model: FieldModel, n: int, lam, *, samples: int = 2000,
                seed=0, ci_boot: int = 200):
    """Monte Carlo pressure over the side-n box with a bootstrap interval.

    Returns (estimate, ci_low, ci_high).  The estimate is the log of the
    empirical exponential moment divided by the volume; intervals are
    percentile bootstrap over the sampled tilted weights.
    """
    v = _as_tilt(model, lam)
    rng = np.random.default_rng(seed)
    from .lattice import make_box
    box = make_box((0,) * model.dim, n, model.dim)
    count = box.size
    vals = np.empty(samples)
    for i in range(samples):
        config = model.sample_box(box, rng)
        total = np.zeros(model.k)
        for idx in config.values():
            total += model.atoms[idx]
        vals[i] = total @ v
    est = (logsumexp(vals) - math.log(samples)) / count
    boots = np.empty(ci_boot)
    for b in range(ci_boot):
        pick = rng.integers(samples, size=samples)
        boots[b] = (logsumexp(vals[pick]) - math.log(samples)) / count
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return float(est), float(lo), float(hi)


# ---------------------------------------------------------------------------
# limit pressure


def _perron_log_root(M: np.ndarray, rel_tol: float = 1e-12,
                     max_iter: int = 10_000) -> float:
    """log of the Perron root of a strictly positive matrix."""
    v = np.full(M.shape[0], 1.0 / M.shape[0])
    prev = None
    hits = 0
    for _ in range(max_iter):
        w = M @ v
        r = w.sum()
        v = w / r
        if prev is not None and abs(r - prev) <= rel_tol * abs(r):
            hits += 1
            if hits >= 2:
                return math.log(r)
        else:
            hits = 0
        prev = r
    raise ConvergenceError(
        f"power iteration did not stabilize in {max_iter} steps")


def pressure_limit(model: FieldModel, lam) -> float:
    """Infinite-volume pressure, exact per model kind."""
    v = _as_tilt(model, lam)
    if not np.any(v):
        return 0.0
    if isinstance(model, IIDField):
        return float(logsumexp(model.log_w + model.atoms @ v))
    if isinstance(model, MarkovField):
        tilt = model.atoms @ v
        shift = float(np.max(tilt))
        M = model.transition * np.exp(tilt - shift)[None, :]
        return _perron_log_root(M) + shift
    if isinstance(model, BlockField):
        return model.block_log_mgf(v) / model.block
    if isinstance(model, AffineImageField):
        pulled = model.matrix.T @ v
        return pressure_limit(model.base, pulled) - float(model.offset @ v)
    raise TypeError(f"no limit pressure rule for {type(model).__name__}")


# ---------------------------------------------------------------------------
# curves


@dataclass
class PressureCurve:
    """Pressure sampled on a tilt grid (limit or fixed finite volume)."""

    lams: np.ndarray          # (N,) for k=1 or (N, 2) for k=2
    values: np.ndarray        # (N,)
    mode: str                 # "exact" or "mc"
    model: str
    n: int = 0                # 0 marks the infinite-volume limit
    ci: np.ndarray = None     # (N, 2) for mc mode

    @property
    def k(self) -> int:
        return 1 if self.lams.ndim == 1 else self.lams.shape[1]

    def convexity_check(self, tolerance: float = 1e-9) -> VerificationReport:
        """Weighted midpoint convexity along a 1-D tilt grid."""
        if self.k != 1:
            raise ValueError("convexity check expects a 1-D tilt grid")
        x, y = self.lams, self.values
        slacks = []
        for i in range(1, len(x) - 1):
            span = x[i + 1] - x[i - 1]
            interp = ((x[i + 1] - x[i]) * y[i - 1]
                      + (x[i] - x[i - 1]) * y[i + 1]) / span
            slacks.append(float(interp - y[i]))
        return VerificationReport.from_slacks(
            "pressure-convexity", slacks, tolerance,
            details={"model": self.model, "points": len(x)})

    def rows(self):
        out = []
        for i in range(len(self.values)):
            lam = (self.lams[i],) if self.k == 1 else tuple(self.lams[i])
            ci = ("", "") if self.ci is None else tuple(self.ci[i])
            out.append(tuple(lam) + (self.values[i], self.mode) + ci)
        return out

    def header(self):
        lam_cols = (("lambda_1",) if self.k == 1
                    else ("lambda_1", "lambda_2"))
        return lam_cols + ("value", "mode", "ci_low", "ci_high")


def compute_pressure_curve(model: FieldModel, lams, *, n: int = 0,
                           mode: str = "exact", samples: int = 2000,
                           seed=0) -> PressureCurve:
    """Evaluate the pressure on a grid of tilts.

    n = 0 requests the infinite-volume limit (exact mode only); n >= 1 the
    finite-volume pressure, exactly or by Monte Carlo.
    """
    lams = np.asarray(lams, dtype=float)
    pts = lams if lams.ndim > 1 else lams[:, None]
    values = np.empty(len(pts))
    ci = None
    if mode == "exact":
        for i, lam in enumerate(pts):
            values[i] = (pressure_limit(model, lam) if n == 0
                         else pressure_finite(model, n, lam))
    elif mode == "mc":
        if n == 0:
            raise ValueError("Monte Carlo mode needs a finite volume side")
        ci = np.empty((len(pts), 2))
        for i, lam in enumerate(pts):
            values[i], ci[i, 0], ci[i, 1] = pressure_mc(
                model, n, lam, samples=samples, seed=seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return PressureCurve(lams=lams, values=values, mode=mode,
                         model=model.describe(), n=n, ci=ci)


def write_curve_csv(path, curve: PressureCurve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(curve.header())
        w.writerows(curve.rows())


# ---------------------------------------------------------------------------
# structural checks


def block_pressure_identity_check(model: BlockField, lam_grid, *,
                                  j=None, ks=(2, 3),
                                  tolerance: float = 1e-10) -> VerificationReport:
    """Pressure over k*j sites equals pressure over j sites for block models."""
    j = model.block if j is None else j
    if j != model.block:
        raise ValueError("identity holds at the model's own block side")
    slacks = []
    worst_pair = None
    for lam in lam_grid:
        p_j = pressure_finite(model, j, lam)
        for k in ks:
            p_kj = pressure_finite(model, k * j, lam)
            slack = -abs(p_kj - p_j)
            slacks.append(slack)
            if worst_pair is None or slack < worst_pair[0]:
                worst_pair = (slack, float(np.atleast_1d(lam)[0]), k)
    details = {"model": model.describe(), "j": j, "ks": list(ks),
               "worst_at": {"lambda": worst_pair[1], "k": worst_pair[2]}}
    return VerificationReport.from_slacks(
        "block-pressure-identity", slacks, tolerance, details=details)


def pressure_subadditivity_check(model: FieldModel, lam, m: int, n: int, *,
                                 t=None, alpha=None,
                                 tolerance: float = 1e-9) -> VerificationReport:
    """Finite-volume pressure bound from tiling plus local control.

    p_n(lam) >= (1 - rho) p_m(lam) - c(m)/m^d - rho (t(V1) - log alpha(V1))

    where rho is the margin density of the side-m tiling of the side-n box
    and (t, alpha) certify local control of the scalar field <lam, sigma>
    for the open unit interval V1.  The defaults use that field's covering
    certificate, for which the bound holds for every strictly positive
    model and all m <= n that admit at least one tile.
    """
    from .convexsets import BoxShape
    v = _as_tilt(model, lam)
    if t is None or alpha is None:
        unit = BoxShape((1.0,))
        cert = scalarize(model, v).local_control_certificate(unit)
        t = cert.t if t is None else t
        alpha = cert.alpha if alpha is None else alpha
    g = int(math.floor(model.decoupling.g(m)))
    tiling = tile(n, m, g, model.invariance_step, model.dim)
    rho = float(tiling.rho)
    c_m = model.decoupling.c(m) / (m ** model.dim)
    p_n = pressure_finite(model, n, v)
    p_m = pressure_finite(model, m, v)
    rhs = (1.0 - rho) * p_m - c_m - rho * (t - math.log(alpha))
    slack = p_n - rhs
    details = {"model": model.describe(), "m": m, "n": n, "rho": rho,
               "gap": g, "cost_per_site": c_m, "t": t, "alpha": alpha,
               "p_n": p_n, "p_m": p_m}
    return VerificationReport.from_slacks(
        "pressure-subadditivity", [slack], tolerance, details=details)


def residual_beta_check(model: FieldModel, sites=None, t=None, alpha=None, *,
                        assignment_budget: int = 400, seed=0,
                        tolerance: float = 1e-9) -> VerificationReport:
    """Conditional exponential moments stay above beta = exp(-t) alpha.

    For a scalar field eta (build one with affine_image or scalarize) and
    any conditioning F on the given site set,  E[exp eta(0) | F] >= beta
    with (t, alpha) a local-control certificate of eta for the open unit
    interval.  Assignments of the conditioning sites are enumerated
    exhaustively when few enough, otherwise sampled from the model itself;
    zero-mass assignments are skipped and an all-skipped run is reported
    as inconclusive.
    """
    from .convexsets import BoxShape
    if model.k != 1:
        raise ValueError("residual bound concerns scalar fields; apply "
                         "scalarize or affine_image first")
    if t is None or alpha is None:
        cert = model.local_control_certificate(BoxShape((1.0,)))
        t = cert.t if t is None else t
        alpha = cert.alpha if alpha is None else alpha
    floor = math.log(alpha) - t
    support = model.support_indices()
    origin = (0,) * model.dim
    if sites is None:
        sites = ([(i,) for i in range(-3, 4) if i != 0] if model.dim == 1
                 else [(i, j) for i in range(-2, 3) for j in range(-2, 3)
                       if (i, j) != (0, 0)])
    sites = [s for s in sites if tuple(s) != origin]
    values = model.atoms[:, 0]
    total = len(support) ** len(sites)
    assignments = []
    if total <= assignment_budget:
        import itertools
        for combo in itertools.product(support, repeat=len(sites)):
            assignments.append(dict(zip(sites, combo)))
        coverage = f"all {total} assignments on {len(sites)} sites"
    else:
        rng = np.random.default_rng(seed)
        from .lattice import make_box
        lo = min(min(s) for s in sites)
        hi = max(max(s) for s in sites)
        box = make_box((lo,) * model.dim, hi - lo + 1, model.dim)
        for _ in range(assignment_budget):
            config = model.sample_box(box, rng)
            assignments.append({s: config[tuple(s)] for s in sites})
        coverage = (f"{assignment_budget} model-sampled assignments "
                    f"on {len(sites)} sites; not exhaustive")
    slacks = []
    skipped = 0
    for assign in assignments:
        cons = {s: frozenset((i,)) for s, i in assign.items()}
        log_f = model.cylinder_log_prob(cons)
        if log_f == -math.inf:
            skipped += 1
            continue
        terms = []
        for i in support:
            joint = dict(cons)
            joint[origin] = frozenset((i,))
            terms.append(values[i] + model.cylinder_log_prob(joint))
        log_moment = float(logsumexp(np.array(terms))) - log_f
        slacks.append(log_moment - floor)
    details = {"model": model.describe(), "t": t, "alpha": alpha,
               "log_beta": floor, "assignments": coverage,
               "zero_mass_skipped": skipped}
    return VerificationReport.from_slacks(
        "residual-beta", slacks, tolerance, details=details,
        inconclusive=not slacks)


def scalar_pressure_curve(model: FieldModel, direction, lam_grid, **kw):
    """Pressure of the scalar field <direction, sigma> along a 1-D grid."""
    return compute_pressure_curve(scalarize(model, direction), lam_grid, **kw)
