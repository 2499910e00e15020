"""Entropy integrals: boxes, closed forms, and cone-bounded regions.

``entropy_integral`` is an adaptive tensor-product Gauss-Legendre rule over
an axis-aligned box.  ``closed_S2`` is the closed form for the square
[-c, c]^2 under the two-member identity body, with its linear asymptote in
``asymptote_S2``.

``ConeRegion`` bounds a compact body between two linear-model sheets and a
pointed cone with apex at the origin.  Every cone ray crosses each sheet
exactly once (the height along a ray grows faster than any exponent row, a
condition validated on the generators and closed under convex combination),
which gives clean entry/exit times, a reliable bounding box, and
well-defined sheet patches.  ``linear_entropy_volume_check`` compares the
entropy flux difference of the two patches against (n+1) times the
Monte-Carlo volume of the body, sampled with stratified counter-based
streams so results are reproducible under any execution order.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    DegenerateRegionError,
    InputError,
    QuadratureBudgetError,
    RegionFormatError,
)
from .model import StatisticalModel, batch_F_S, parse_model, model_to_doc
from .polylog import ZETA3, li2, li3


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _NODES:
        _NODES[order] = leggauss(order)
    return _NODES[order]


def _cell_rule(model: StatisticalModel, lo: np.ndarray, hi: np.ndarray, order: int) -> float:
    n = lo.size
    nodes, weights = _gl(order)
    axes = [0.5 * (hi[i] + lo[i]) + 0.5 * (hi[i] - lo[i]) * nodes for i in range(n)]
    waxes = [0.5 * (hi[i] - lo[i]) * weights for i in range(n)]
    grid = np.meshgrid(*axes, indexing="ij")
    X = np.stack([g.ravel() for g in grid], axis=-1)
    _, S = batch_F_S(model, X)
    wgrid = waxes[0]
    for wa in waxes[1:]:
        wgrid = np.multiply.outer(wgrid, wa)
    return float(np.sum(S * wgrid.ravel()))


_ORDER_LOW = 7
_ORDER_HIGH = 15


def entropy_integral(
    model: StatisticalModel,
    lower,
    upper,
    tol: float = 1e-8,
    budget: int = 4_000_000,
) -> QuadratureResult:
    """Integral of the pointwise entropy S over an axis-aligned box.

    Cells carry an embedded low/high Gauss-Legendre pair; the worst cell is
    bisected along its widest side until the summed error estimate drops
    below tol.  Exceeding the evaluation budget raises
    QuadratureBudgetError with the best estimate attached.
    """
    lo = np.asarray(lower, dtype=float).reshape(-1)
    hi = np.asarray(upper, dtype=float).reshape(-1)
    if lo.shape != (model.n,) or hi.shape != (model.n,):
        raise InputError(f"box bounds must have {model.n} coordinates")
    if np.any(hi < lo):
        raise InputError("upper bounds must not be below lower bounds")
    if np.any(hi == lo):
        return QuadratureResult(value=0.0, error_estimate=0.0, evaluations=0)

    per_cell = _ORDER_LOW**model.n + _ORDER_HIGH**model.n
    evals = 0

    def measure(l, h):
        coarse = _cell_rule(model, l, h, _ORDER_LOW)
        fine = _cell_rule(model, l, h, _ORDER_HIGH)
        return fine, abs(fine - coarse)

    value, err = measure(lo, hi)
    evals += per_cell
    heap: list[tuple[float, int, np.ndarray, np.ndarray, float, float]] = []
    counter = 0
    heapq.heappush(heap, (-err, counter, lo, hi, value, err))
    total_err = err
    total_val = value
    while total_err > tol:
        if evals + 2 * per_cell > budget:
            raise QuadratureBudgetError(
                f"evaluation budget {budget} exhausted with error {total_err}",
                QuadratureResult(value=total_val, error_estimate=total_err, evaluations=evals),
            )
        neg_err, _, clo, chi, cval, cerr = heapq.heappop(heap)
        axis = int(np.argmax(chi - clo))
        mid = 0.5 * (clo[axis] + chi[axis])
        left_hi = chi.copy()
        left_hi[axis] = mid
        right_lo = clo.copy()
        right_lo[axis] = mid
        v1, e1 = measure(clo, left_hi)
        v2, e2 = measure(right_lo, chi)
        evals += 2 * per_cell
        counter += 1
        heapq.heappush(heap, (-e1, counter, clo, left_hi, v1, e1))
        counter += 1
        heapq.heappush(heap, (-e2, counter, right_lo, chi, v2, e2))
        total_val = total_val - cval + v1 + v2
        total_err = total_err - cerr + e1 + e2
    return QuadratureResult(value=total_val, error_estimate=total_err, evaluations=evals)


_PI2_3 = math.pi**2 / 3.0


def closed_S2(c: float) -> float:
    """Entropy integral over [-c, c]^2 for the two-member identity body."""
    if not (math.isfinite(c) and c >= 0.0):
        raise InputError(f"c must be finite and nonnegative, got {c}")
    y = 2.0 * c
    if y <= 700.0:
        z = -math.exp(y)
        p2 = li2(z)
        p3 = li3(z)
    else:
        # inversion applied directly to avoid overflowing e^(2c)
        small = -math.exp(-y)
        p2 = -math.pi**2 / 6.0 - 0.5 * y * y - li2(small)
        p3 = li3(small) - y**3 / 6.0 - math.pi**2 * y / 6.0
    return 4.0 * c * p2 - 6.0 * p3 - 2.0 * _PI2_3 * c - 4.5 * ZETA3


def asymptote_S2(c: float) -> float:
    """Large-c linear asymptote of closed_S2."""
    if not (math.isfinite(c) and c >= 0.0):
        raise InputError(f"c must be finite and nonnegative, got {c}")
    return 2.0 * _PI2_3 * c - 4.5 * ZETA3


# --- cone regions ---------------------------------------------------------

_PROBE_SEED = 20290818  # internal geometry probing; not part of MC statistics
_PROBE_DIRECTIONS = 1024


@dataclass(frozen=True, eq=False)
class ConeRegion:
    """Compact body between two linear sheets inside a pointed cone."""

    generators: np.ndarray  # (k, n+1) unit rays
    lower: StatisticalModel
    upper: StatisticalModel
    facets: np.ndarray  # (q, n+1) outward normals; inside is facet . p <= 0
    swapped: bool  # sheets arrived in upper/lower order and were exchanged
    identical: bool  # the two sheets coincide; the body is empty

    @property
    def n(self) -> int:
        return self.lower.n


def _require_linear(model: StatisticalModel, name: str) -> None:
    if not model.is_linear:
        raise RegionFormatError(f"{name} sheet must be an affine model with zero constants")


def _cone_facets(rays: np.ndarray) -> np.ndarray:
    dim = rays.shape[1]
    pts = np.vstack([np.zeros(dim), rays])
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise RegionFormatError(f"generators do not span a full-dimensional cone: {e}") from e
    if 0 not in hull.vertices:
        raise RegionFormatError("cone is not pointed (origin is interior to the hull)")
    eqs = hull.equations  # rows (normal, offset), normal . x + offset <= 0 inside
    through_origin = np.abs(eqs[:, -1]) <= 1e-9
    facets = eqs[through_origin, :-1]
    if facets.size == 0:
        raise RegionFormatError("no cone facets found; generators may be degenerate")
    # deduplicate parallel copies
    uniq: list[np.ndarray] = []
    for row in facets:
        row = row / np.linalg.norm(row)
        if not any(np.linalg.norm(row - u) < 1e-9 for u in uniq):
            uniq.append(row)
    return np.asarray(uniq)


def _probe_directions(rays: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng(_PROBE_SEED)
    k = rays.shape[0]
    combos = rng.dirichlet(np.ones(k), size=_PROBE_DIRECTIONS) @ rays
    mids = np.array([rays[i] + rays[j] for i in range(k) for j in range(i + 1, k)])
    dirs = np.vstack([rays, mids, combos]) if mids.size else np.vstack([rays, combos])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def _phi(model: StatisticalModel, dirs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Height of t d above the sheet: t h_d - F(t x_d)."""
    pts = ts[:, None] * dirs
    F, _ = batch_F_S(model, pts[:, :-1])
    return pts[:, -1] - F


def _crossing_times(model: StatisticalModel, dirs: np.ndarray) -> np.ndarray:
    """Unique t >= 0 where each ray crosses the sheet graph."""
    D = dirs.shape[0]
    t_hi = np.ones(D)
    for _ in range(80):
        below = _phi(model, dirs, t_hi) <= 0.0
        if not below.any():
            break
        t_hi[below] *= 2.0
        if float(t_hi.max()) > 1e12:
            raise DegenerateRegionError(
                "a cone ray never exits the sheet; the region is unbounded"
            )
    else:
        raise DegenerateRegionError("a cone ray never exits the sheet; the region is unbounded")
    t_lo = np.zeros(D)
    for _ in range(90):
        mid = 0.5 * (t_lo + t_hi)
        below = _phi(model, dirs, mid) < 0.0
        t_lo = np.where(below, mid, t_lo)
        t_hi = np.where(below, t_hi, mid)
    return 0.5 * (t_lo + t_hi)


def cone_region(generators, sheet_a: StatisticalModel, sheet_b: StatisticalModel) -> ConeRegion:
    """Validate and orient a cone region document."""
    G = np.asarray(generators, dtype=float)
    if G.ndim != 2:
        raise RegionFormatError("generators must be a list of rays")
    _require_linear(sheet_a, "first")
    _require_linear(sheet_b, "second")
    if sheet_a.n != sheet_b.n:
        raise RegionFormatError("both sheets must live over the same R^n")
    n = sheet_a.n
    if G.shape[1] != n + 1:
        raise RegionFormatError(f"generators must have {n + 1} coordinates")
    if G.shape[0] < n + 1:
        raise RegionFormatError(f"need at least {n + 1} generators")
    if not np.isfinite(G).all():
        raise RegionFormatError("generators must be finite")
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms == 0.0):
        raise RegionFormatError("zero generator ray")
    rays = G / norms[:, None]
    facets = _cone_facets(rays)

    # every generator must rise faster than every exponent row of both
    # sheets; convexity of max(A x) closes this over the whole cone and
    # makes each ray cross each sheet exactly once
    for model, name in ((sheet_a, "first"), (sheet_b, "second")):
        slopes = model.A @ rays[:, :n].T  # (m, k)
        worst = rays[:, n] - slopes.max(axis=0)
        if np.any(worst <= 1e-9 * (1.0 + np.abs(rays[:, n]))):
            raise DegenerateRegionError(
                f"a generator does not rise above the {name} sheet's exponents; "
                "the region would be unbounded"
            )

    dirs = _probe_directions(rays)
    t_a = _crossing_times(sheet_a, dirs)
    t_b = _crossing_times(sheet_b, dirs)
    scale = max(1.0, float(np.max(t_a)), float(np.max(t_b)))
    diff = t_b - t_a
    tol = 1e-9 * scale
    if float(np.max(np.abs(diff))) <= tol:
        return ConeRegion(
            generators=rays, lower=sheet_a, upper=sheet_b, facets=facets,
            swapped=False, identical=True,
        )
    if np.all(diff >= -tol):
        lower, upper, swapped = sheet_a, sheet_b, False
    elif np.all(diff <= tol):
        lower, upper, swapped = sheet_b, sheet_a, True
    else:
        raise DegenerateRegionError("the sheets cross inside the cone")
    return ConeRegion(
        generators=rays, lower=lower, upper=upper, facets=facets,
        swapped=swapped, identical=False,
    )


def parse_region(doc) -> ConeRegion:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise RegionFormatError(f"region document is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise RegionFormatError("region document must be a JSON object")
    for key in ("generators", "lower", "upper"):
        if key not in doc:
            raise RegionFormatError(f"region document needs field {key!r}")
    if "apex" in doc and np.any(np.asarray(doc["apex"], dtype=float) != 0.0):
        raise RegionFormatError("the cone apex must be the origin")
    return cone_region(doc["generators"], parse_model(doc["lower"]), parse_model(doc["upper"]))


def region_to_doc(region: ConeRegion) -> dict:
    return {
        "generators": region.generators.tolist(),
        "lower": model_to_doc(region.lower),
        "upper": model_to_doc(region.upper),
    }


def _segment_points(region: ConeRegion) -> tuple[np.ndarray, np.ndarray]:
    """Entry (lower-sheet) and exit (upper-sheet) points on probe rays."""
    dirs = _probe_directions(region.generators)
    t1 = _crossing_times(region.lower, dirs)
    t2 = _crossing_times(region.upper, dirs)
    return t1[:, None] * dirs, t2[:, None] * dirs


def _bounding_box(region: ConeRegion) -> tuple[np.ndarray, np.ndarray]:
    p1, p2 = _segment_points(region)
    pts = np.vstack([p1, p2])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return lo - 0.15 * span, hi + 0.15 * span


def region_contains(region: ConeRegion, points: np.ndarray) -> np.ndarray:
    """Membership of points (B, n+1) in the body."""
    P = np.asarray(points, dtype=float)
    tol = 1e-12 * (1.0 + np.abs(P).max(axis=1))
    in_cone = np.all(region.facets @ P.T <= tol, axis=0)
    F_lo, _ = batch_F_S(region.lower, P[:, :-1])
    F_hi, _ = batch_F_S(region.upper, P[:, :-1])
    between = (P[:, -1] >= F_lo) & (P[:, -1] <= F_hi)
    return in_cone & between


def _psi_line(region: ConeRegion, model: StatisticalModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Worst facet value of lifted points and their entropies; X is (B, n)."""
    F, S = batch_F_S(model, X)
    lifted = np.hstack([X, F[:, None]])
    psi = (region.facets @ lifted.T).max(axis=0)
    return psi, S


_SCAN_POINTS = 321
_GL_INNER = 24
_GL_OUTER = 16


def _line_intervals(
    region: ConeRegion, model: StatisticalModel, prefix: np.ndarray, lo: float, hi: float
) -> list[tuple[float, float]]:
    """Sub-intervals of the scan segment where the lifted sheet is in the cone."""
    s = np.linspace(lo, hi, _SCAN_POINTS)
    X = np.column_stack([np.broadcast_to(prefix, (s.size, prefix.size)), s]) if prefix.size else s[:, None]
    psi, _ = _psi_line(region, model, X)
    inside = psi <= 0.0

    def point_psi(val: float) -> float:
        x = np.concatenate([prefix, [val]])[None, :] if prefix.size else np.array([[val]])
        p, _ = _psi_line(region, model, x)
        return float(p[0])

    def bisect(a: float, b: float) -> float:
        # psi changes sign between a and b
        fa = point_psi(a)
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = point_psi(m)
            if (fa <= 0.0) == (fm <= 0.0):
                a, fa = m, fm
            else:
                b = m
        return 0.5 * (a + b)

    intervals: list[tuple[float, float]] = []
    start: float | None = s[0] if inside[0] else None
    for i in range(1, s.size):
        if inside[i] and not inside[i - 1]:
            start = bisect(s[i - 1], s[i])
        elif inside[i - 1] and not inside[i]:
            end = bisect(s[i - 1], s[i])
            if start is not None and end > start:
                intervals.append((start, end))
            start = None
    if start is not None and s[-1] > start:
        intervals.append((float(start), float(s[-1])))
    return intervals


def _integrate_intervals(
    region: ConeRegion, model: StatisticalModel, prefix: np.ndarray,
    intervals: list[tuple[float, float]],
) -> float:
    if not intervals:
        return 0.0
    nodes, weights = _gl(_GL_INNER)
    xs = []
    ws = []
    for a, b in intervals:
        xs.append(0.5 * (a + b) + 0.5 * (b - a) * nodes)
        ws.append(0.5 * (b - a) * weights)
    s = np.concatenate(xs)
    w = np.concatenate(ws)
    X = np.column_stack([np.broadcast_to(prefix, (s.size, prefix.size)), s]) if prefix.size else s[:, None]
    _, S = batch_F_S(model, X)
    return float(S @ w)


def _sheet_patch_integral(region: ConeRegion, model: StatisticalModel) -> tuple[float, float]:
    """Integral of S over the sheet's x-domain inside the cone (flat measure)."""
    dirs = _probe_directions(region.generators)
    ts = _crossing_times(model, dirs)
    pts = ts[:, None] * dirs
    n = region.n
    xlo = pts[:, :n].min(axis=0)
    xhi = pts[:, :n].max(axis=0)
    span = np.maximum(xhi - xlo, 1e-9)
    xlo = xlo - 0.05 * span
    xhi = xhi + 0.05 * span

    if n == 1:
        intervals = _line_intervals(region, model, np.empty(0), float(xlo[0]), float(xhi[0]))
        return _integrate_intervals(region, model, np.empty(0), intervals), 1e-12

    def inner(x1: float) -> float:
        prefix = np.array([x1])
        intervals = _line_intervals(region, model, prefix, float(xlo[1]), float(xhi[1]))
        return _integrate_intervals(region, model, prefix, intervals)

    nodes, weights = _gl(_GL_OUTER)

    def panel(a: float, b: float) -> float:
        vals = np.array([inner(0.5 * (a + b) + 0.5 * (b - a) * t) for t in nodes])
        return float(0.5 * (b - a) * (vals @ weights))

    # adaptive bisection on outer panels; the inner integral is continuous
    # and piecewise smooth, with kinks where cone facets exchange activity
    edges = np.linspace(float(xlo[0]), float(xhi[0]), 9)
    heap: list[tuple[float, int, float, float, float]] = []
    counter = 0
    total = 0.0
    total_err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        whole = panel(a, b)
        mid = 0.5 * (a + b)
        halves = panel(a, mid) + panel(mid, b)
        err = abs(whole - halves)
        total += halves
        total_err += err
        counter += 1
        heapq.heappush(heap, (-err, counter, a, b, halves))
    target = 2e-7 * max(1.0, abs(total))
    rounds = 0
    while total_err > target and rounds < 240 and heap:
        neg_err, _, a, b, val = heapq.heappop(heap)
        total -= val
        total_err -= -neg_err
        mid = 0.5 * (a + b)
        for aa, bb in ((a, mid), (mid, b)):
            whole = panel(aa, bb)
            m2 = 0.5 * (aa + bb)
            halves = panel(aa, m2) + panel(m2, bb)
            err = abs(whole - halves)
            total += halves
            total_err += err
            counter += 1
            heapq.heappush(heap, (-err, counter, aa, bb, halves))
        rounds += 1
    return total, total_err


@dataclass(frozen=True)
class VolumeCheckReport:
    delta_S: float  # upper-patch integral minus lower-patch integral
    volume: float  # MC volume of the body
    volume_times: float  # (n+1) * volume
    mc_sigma: float  # standard error of volume_times
    quad_error: float
    swapped: bool
    identical: bool
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "delta_S": self.delta_S,
            "volume": self.volume,
            "volume_times": self.volume_times,
            "mc_sigma": self.mc_sigma,
            "quad_error": self.quad_error,
            "swapped": self.swapped,
            "identical": self.identical,
            "samples": self.samples,
            "seed": self.seed,
        }


_STRATA = 64


def mc_volume(region: ConeRegion, samples: int, seed: int) -> tuple[float, float]:
    """Stratified rejection estimate of the body volume and its standard error."""
    if samples < _STRATA:
        raise InputError(f"need at least {_STRATA} samples")
    lo, hi = _bounding_box(region)
    axis = int(np.argmax(hi - lo))
    edges = np.linspace(lo[axis], hi[axis], _STRATA + 1)
    base = samples // _STRATA
    extra = samples % _STRATA
    vol = 0.0
    var = 0.0
    dim = lo.size
    for k in range(_STRATA):
        n_k = base + (1 if k < extra else 0)
        slo = lo.copy()
        shi = hi.copy()
        slo[axis] = edges[k]
        shi[axis] = edges[k + 1]
        v_k = float(np.prod(shi - slo))
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, k])))
        pts = rng.uniform(size=(n_k, dim)) * (shi - slo) + slo
        hits = int(region_contains(region, pts).sum())
        p = hits / n_k
        vol += v_k * p
        var += v_k * v_k * p * (1.0 - p) / n_k
    return vol, math.sqrt(var)


def linear_entropy_volume_check(region: ConeRegion, samples: int, seed: int) -> VolumeCheckReport:
    """Compare the patch entropy difference with (n+1) times the MC volume."""
    n = region.n
    if region.identical:
        return VolumeCheckReport(
            delta_S=0.0, volume=0.0, volume_times=0.0, mc_sigma=0.0, quad_error=0.0,
            swapped=region.swapped, identical=True, samples=samples, seed=seed,
        )
    upper_val, upper_err = _sheet_patch_integral(region, region.upper)
    lower_val, lower_err = _sheet_patch_integral(region, region.lower)
    vol, sigma = mc_volume(region, samples, seed)
    return VolumeCheckReport(
        delta_S=upper_val - lower_val,
        volume=vol,
        volume_times=(n + 1) * vol,
        mc_sigma=(n + 1) * sigma,
        quad_error=upper_err + lower_err,
        swapped=region.swapped,
        identical=False,
        samples=samples,
        seed=seed,
    )


@dataclass(frozen=True)
class FaceFluxReport:
    total_flux: float  # sum over facets of |integral of X . N over the patch|
    max_residual: float  # worst pointwise |X . N| over sampled face points
    samples: int


def cone_face_flux(region: ConeRegion, samples_per_facet: int = 4096, seed: int = 0) -> FaceFluxReport:
    """Flux of the position field through the cone facets between the sheets.

    The position is tangent to every cone facet (the apex is the origin),
    so both the pointwise residuals and the patch integrals vanish up to
    rounding; this is measured, not assumed.
    """
    total = 0.0
    worst = 0.0
    used = 0
    for j, facet in enumerate(region.facets):
        incident = region.generators[np.abs(region.generators @ facet) <= 1e-8]
        if incident.shape[0] < region.n:
            continue
        Q, _ = np.linalg.qr(incident.T)  # orthonormal basis of the facet plane
        Q = Q[:, : region.n]
        dirs = incident / np.linalg.norm(incident, axis=1, keepdims=True)
        t_hi = _crossing_times(region.upper, dirs)
        coords = (t_hi[:, None] * dirs) @ Q  # exit points in facet coordinates
        clo = np.minimum(coords.min(axis=0), 0.0)
        chi = coords.max(axis=0)
        span = np.maximum(chi - clo, 1e-9)
        clo = clo - 0.1 * span
        chi = chi + 0.1 * span
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 7000 + j])))
        u = rng.uniform(size=(samples_per_facet, region.n)) * (chi - clo) + clo
        pts = u @ Q.T
        mask = region_contains(region, pts)
        used += samples_per_facet
        if not mask.any():
            continue
        resid = pts[mask] @ facet
        worst = max(worst, float(np.max(np.abs(resid))))
        patch_measure = float(np.prod(chi - clo)) * (int(mask.sum()) / samples_per_facet)
        total += abs(float(resid.mean()) * patch_measure)
    return FaceFluxReport(total_flux=total, max_residual=worst, samples=used)
