"""Exact optimal designs on balls with radial sources.

On a ball the admissible radial flux is unique, so ``psi`` is known in closed
form and the bathtub allocation reduces to cutting ``(0, R)`` at the radii
where ``psi`` crosses each threshold.  All functions here work on piecewise
Laurent polynomials (see :mod:`bangbang.piecewise`) and only fall back to
bracketed root solving for the crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ConstraintError, InfeasibleError
from .core import Ball, unit_ball_volume
from .measure_alloc import FatLevel, level_amounts, prepare, strip_index
from .piecewise import Laurent, PiecewisePoly, real_roots_in
from .rootfind import bracket_root

VOLUME_RTOL = 1e-11


# --------------------------------------------------------------------------- fluxes


@dataclass(frozen=True)
class RadialFlux:
    """``sigma(r) = -P(r) / r**(d-1)`` with ``P(r) = int_0^r rho**(d-1) f``."""

    source: PiecewisePoly
    antiderivative: PiecewisePoly
    sigma: PiecewisePoly
    dimension: int

    def __call__(self, r):
        return self.sigma(r)


def radial_flux(f, d, R=None):
    """Unique radial flux on the ball ``B(0, R)`` with ``-div(sigma e_r) = f``."""
    if d < 1:
        raise ConstraintError("dimension must be >= 1")
    if f.lo != 0.0:
        raise ConstraintError(f"radial source must start at r = 0, starts at {f.lo}")
    if R is not None and abs(f.hi - R) > 1e-14 * R:
        raise ConstraintError(f"source covers [0, {f.hi}] but the ball radius is {R}")
    P_pieces, sig_pieces = [], []
    carry = 0.0
    for p, (a, b) in enumerate(zip(f.breaks, f.breaks[1:])):
        integrand = f.pieces[p].shift(d - 1)
        G = integrand.antiderivative()
        if G.log:
            raise ConstraintError(f"source piece {p} has an r**(-{d}) term; its flux is not Laurent")
        if p == 0 and G.coeffs and G.low < 1:
            raise ConstraintError("source is not integrable at the origin")
        offset = carry - (G.scalar(a) if a > 0 else 0.0)
        P = (G + offset).cleaned(a, b)
        carry = P.scalar(b)
        sig = (-P.shift(-(d - 1))).cleaned(a, b)
        if p == 0 and sig.coeffs and sig.low < 0:
            raise ConstraintError("flux is unbounded at the origin")
        P_pieces.append(P)
        sig_pieces.append(sig)
    return RadialFlux(
        f,
        PiecewisePoly(f.breaks, tuple(P_pieces)),
        PiecewisePoly(f.breaks, tuple(sig_pieces)),
        d,
    )


def divergence_residual(flux):
    """Max coefficient mismatch of ``-(r**(d-1) sigma)' - r**(d-1) f`` over all pieces."""
    d = flux.dimension
    worst = 0.0
    for sig, f in zip(flux.sigma.pieces, flux.source.pieces):
        lhs = -(sig.shift(d - 1).derivative())
        rhs = f.shift(d - 1)
        diff = lhs - rhs
        scale = max([1.0] + [abs(c) for c in rhs.coeffs])
        worst = max(worst, max([0.0] + [abs(c) / scale for c in diff.coeffs]))
    return worst


# --------------------------------------------------------------------------- psi


@dataclass(frozen=True)
class PsiFunction:
    """``psi = sum_i weight_i * sigma_i**2`` as piecewise Laurent polynomials."""

    poly: PiecewisePoly
    dimension: int

    def __call__(self, r):
        return self.poly(r)

    @property
    def radius(self):
        return self.poly.hi

    def numerator(self, p):
        """Polynomial ``r**(2(d-1)) psi`` on piece ``p``, ascending coefficients."""
        piece = self.poly.pieces[p].shift(2 * (self.dimension - 1))
        if piece.low < 0:
            raise ConstraintError("psi numerator has negative powers")
        return np.concatenate([np.zeros(piece.low), piece.coeffs]) if piece.coeffs else np.zeros(1)


def assemble_psi(fluxes, weights):
    fluxes = list(fluxes)
    if not fluxes:
        raise ConstraintError("at least one flux is required")
    d = fluxes[0].dimension
    R = fluxes[0].sigma.hi
    if any(fl.dimension != d or fl.sigma.hi != R for fl in fluxes):
        raise ConstraintError("fluxes must share dimension and radius")
    if len(weights) != len(fluxes):
        raise ConstraintError(f"{len(weights)} weights for {len(fluxes)} fluxes")
    breaks = sorted(set().union(*(fl.sigma.breaks for fl in fluxes)))
    refined = [fl.sigma.refine(breaks) for fl in fluxes]
    pieces = []
    for p, (a, b) in enumerate(zip(breaks, breaks[1:])):
        acc = Laurent(())
        for w, s in zip(weights, refined):
            acc = acc + (s.pieces[p] * s.pieces[p]) * float(w)
        pieces.append(acc.cleaned(a, b))
    return PsiFunction(PiecewisePoly(tuple(breaks), tuple(pieces)), d)


# --------------------------------------------------------------------------- segmentation


@dataclass(frozen=True)
class Segment:
    """Maximal interval where psi is strictly increasing (+1), decreasing (-1) or constant (0).

    ``parts`` are ``(a, b, Laurent)`` sub-intervals, one per psi piece.
    """

    a: float
    b: float
    kind: int
    va: float
    vb: float
    parts: tuple

    @property
    def vmin(self):
        return min(self.va, self.vb)

    @property
    def vmax(self):
        return max(self.va, self.vb)

    def value(self, r):
        # psi is a sum of squares; clamp cancellation noise below zero
        for a, b, lp in self.parts:
            if r <= b:
                return max(lp.scalar(r), 0.0)
        return max(self.parts[-1][2].scalar(r), 0.0)

    def crossing(self, alpha):
        """Radius in the segment where psi equals ``alpha`` (monotone segments only)."""
        for a, b, lp in self.parts:
            fa, fb = lp.scalar(a) - alpha, lp.scalar(b) - alpha
            if fa == 0.0:
                return a
            if fa * fb <= 0:
                return bracket_root(lambda r: lp.scalar(r) - alpha, a, b)
        raise InfeasibleError(f"psi does not cross {alpha!r} on [{self.a}, {self.b}]")


@dataclass(frozen=True)
class MonotoneSegmentation:
    segments: tuple
    psi: PsiFunction

    @property
    def has_constant(self):
        return any(s.kind == 0 for s in self.segments)

    @property
    def turning_points(self):
        return [s.b for s in self.segments[:-1]]


def monotone_segments(psi, probe=16):
    """Split ``(0, R)`` into maximal strictly monotone or constant pieces of psi."""
    raw = []
    poly = psi.poly
    for p, (a, b) in enumerate(zip(poly.breaks, poly.breaks[1:])):
        lp = poly.pieces[p]
        dlp = lp.derivative().cleaned(a, b)
        if dlp.is_zero or dlp.magnitude(a, b) * (b - a) <= 1e-13 * max(lp.magnitude(a, b), 1e-300):
            value = max(lp.scalar(0.5 * (a + b)), 0.0)
            raw.append((a, b, 0, value, value, lp))
            continue
        cuts = [a] + real_roots_in(dlp, a, b, n_probe=probe) + [b]
        for x0, x1 in zip(cuts, cuts[1:]):
            if x1 <= x0:
                continue
            mid = 0.5 * (x0 + x1)
            kind = 1 if dlp.scalar(mid) > 0 else -1
            raw.append((x0, x1, kind, max(lp.scalar(x0), 0.0), max(lp.scalar(x1), 0.0), lp))
    merged = []
    for a, b, kind, va, vb, lp in raw:
        if merged:
            prev = merged[-1]
            cont = abs(prev["vb"] - va) <= 1e-12 * max(abs(va), abs(prev["vb"]), 1e-300)
            same = prev["kind"] == kind and (kind != 0 or prev["va"] == va)
            if cont and same:
                prev["b"], prev["vb"] = b, vb
                prev["parts"].append((a, b, lp))
                continue
        merged.append(dict(a=a, b=b, kind=kind, va=va, vb=vb, parts=[(a, b, lp)]))
    segs = tuple(
        Segment(m["a"], m["b"], m["kind"], m["va"], m["vb"], tuple(m["parts"])) for m in merged
    )
    return MonotoneSegmentation(segs, psi)


# --------------------------------------------------------------------------- distribution


class RadialDistribution:
    """``alpha -> volume{r : psi(r) > alpha}`` for a segmented radial psi."""

    def __init__(self, segmentation, d):
        self.segmentation = segmentation
        self.dimension = d
        self.ball = Ball(segmentation.psi.radius, d)
        self.total_measure = self.ball.measure
        self._omega = unit_ball_volume(d)

    def _vol(self, a, b):
        d = self.dimension
        return self._omega * (b**d - a**d)

    def superlevel(self, alpha, strict=True):
        """Intervals of ``{psi > alpha}`` (or ``>=`` when ``strict`` is False)."""
        out = []
        for s in self.segmentation.segments:
            if s.kind == 0:
                if s.va > alpha or (not strict and s.va >= alpha):
                    out.append((s.a, s.b))
                continue
            if alpha < s.vmin:
                out.append((s.a, s.b))
            elif alpha >= s.vmax:
                continue
            else:
                r = s.crossing(alpha)
                out.append((r, s.b) if s.kind > 0 else (s.a, r))
        return out

    def __call__(self, alpha):
        return math.fsum(self._vol(a, b) for a, b in self.superlevel(alpha))

    def left_limit(self, alpha):
        return math.fsum(self._vol(a, b) for a, b in self.superlevel(alpha, strict=False))

    @property
    def max_value(self):
        return max(s.vmax for s in self.segmentation.segments)

    def jumps(self):
        """``(value, measure)`` for every constant segment level, merged by value."""
        out = {}
        for s in self.segmentation.segments:
            if s.kind == 0:
                out[s.va] = out.get(s.va, 0.0) + self._vol(s.a, s.b)
        return sorted(out.items())

    def breakpoint_levels(self):
        vals = set()
        for s in self.segmentation.segments:
            vals.update((s.va, s.vb))
        return sorted(vals)


def radial_distribution(psi, segmentation, d):
    return RadialDistribution(segmentation, d)


def radial_thresholds(dist, q, tol=VOLUME_RTOL):
    """Thresholds on the continuous distribution, as in the discrete case.

    Fat levels are tested first (the threshold is then exactly the level
    value); otherwise the least alpha with ``lambda(alpha) <= Q_k`` is found
    by bisection to float resolution.
    """
    q = np.asarray(q, float)
    mu = dist.total_measure
    cum = np.array([math.fsum(q[: k + 1]) for k in range(q.size)])
    if abs(cum[-1] - mu) > tol * mu:
        raise ConstraintError(f"quantities sum to {cum[-1]!r}, ball volume is {mu!r}")
    slack = tol * mu
    jumps = dist.jumps()
    lam0 = dist(0.0)
    alphas = np.zeros(q.size)
    for k, target in enumerate(cum[:-1]):
        if lam0 <= target + slack:
            continue
        hit = [c for c, _ in jumps if dist(c) <= target + slack and target <= dist.left_limit(c) + slack]
        if hit:
            alphas[k] = min(hit)
            continue
        lo, hi = 0.0, dist.max_value
        # enough halvings to reach subnormal thresholds; the loop stops as soon
        # as the bracket stops shrinking
        for _ in range(2200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if dist(mid) <= target:
                hi = mid
            else:
                lo = mid
        if abs(dist(hi) - target) > slack:
            raise InfeasibleError(
                f"threshold {k + 1}: volume residual {dist(hi) - target!r} exceeds {slack!r}"
            )
        alphas[k] = hi
    return alphas


# --------------------------------------------------------------------------- designs


@dataclass(frozen=True)
class RadialDesign:
    """Concentric bands ``[edges[j], edges[j+1]]`` with material fractions ``theta[j]``.

    Each band is a simple laminate with layers orthogonal to ``e_r``; its
    radial conductivity eigenvalue is ``lambda_-(theta)``.
    """

    edges: np.ndarray
    theta: np.ndarray
    dimension: int
    materials: tuple
    alphas: np.ndarray = None
    levels: tuple = field(default=())

    @property
    def radius(self):
        return float(self.edges[-1])

    @property
    def interfaces(self):
        return self.edges[1:-1].tolist()

    @property
    def band_volumes(self):
        return unit_ball_volume(self.dimension) * np.diff(self.edges**self.dimension)

    @property
    def volumes(self):
        return self.band_volumes @ self.theta

    @property
    def band_materials(self):
        return np.argmax(self.theta, axis=1)

    @property
    def is_bang_bang(self):
        return bool(np.all(np.isclose(self.theta.max(axis=1), 1.0, rtol=0, atol=1e-14)))

    def band_index(self, r):
        idx = np.searchsorted(self.edges, r, side="right") - 1
        return np.clip(idx, 0, len(self.theta) - 1)

    def theta_at(self, r):
        return self.theta[self.band_index(r)]

    def inverse_lambda(self):
        inv = 1.0 / np.array([m.lambda_min for m in self.materials])
        return self.theta @ inv

    def lambda_minus_at(self, r):
        return 1.0 / self.inverse_lambda()[self.band_index(r)]

    def with_materials(self, theta, materials):
        return RadialDesign(self.edges, theta, self.dimension, tuple(materials), self.alphas, self.levels)


def _merge_bands(edges, thetas):
    out_e, out_t = [edges[0]], []
    for (a, b), th in zip(zip(edges, edges[1:]), thetas):
        if b <= a:
            continue
        if out_t and np.array_equal(out_t[-1], th):
            out_e[-1] = b
        else:
            out_t.append(th)
            out_e.append(b)
    return np.array(out_e), np.array(out_t)


def solve_radial_design(psi, segmentation, materials, q, d, alphas=None):
    """Optimal radial design for sorted, strictly ordered materials and exact quantities."""
    materials = tuple(materials)
    q = np.asarray(q, float)
    n = q.size
    if len(materials) != n:
        raise ConstraintError(f"{n} quantities for {len(materials)} materials")
    lam = [m.lambda_min for m in materials]
    if any(b <= a for a, b in zip(lam, lam[1:])):
        raise ConstraintError("materials must be strictly increasing in lambda_min; merge ties first")
    dist = radial_distribution(psi, segmentation, d)
    if alphas is None:
        alphas = radial_thresholds(dist, q)
    alphas = np.asarray(alphas, float)
    omega = unit_ball_volume(d)

    pieces = []  # (a, b, material or None, level alpha or None)
    for s in segmentation.segments:
        if s.kind == 0:
            if s.va in alphas:
                pieces.append((s.a, s.b, None, s.va))
            else:
                pieces.append((s.a, s.b, int(strip_index([s.va], alphas)[0]), None))
            continue
        cuts = sorted({s.crossing(a) for a in set(alphas.tolist()) if s.vmin < a < s.vmax})
        pts = [s.a] + cuts + [s.b]
        for x0, x1 in zip(pts, pts[1:]):
            if x1 > x0:
                v = s.value(0.5 * (x0 + x1))
                pieces.append((x0, x1, min(int(strip_index([v], alphas)[0]), n - 1), None))

    strip_amounts = np.zeros(n)
    level_intervals = {}
    for a, b, k, lev in pieces:
        vol = omega * (b**d - a**d)
        if lev is None:
            strip_amounts[k] += vol
        else:
            level_intervals.setdefault(lev, []).append((a, b))
    level_measures = {
        lev: math.fsum(omega * (b**d - a**d) for a, b in iv) for lev, iv in level_intervals.items()
    }
    mu = omega * psi.radius**d
    plan = level_amounts(alphas, q, strip_amounts, level_measures, VOLUME_RTOL * mu * 10)

    edges, thetas, ledger = [], [], []
    fills = {}
    for lev, ((lo, hi), amounts) in plan.items():
        fills[lev] = _fill_level(level_intervals[lev], amounts, d, omega)
        ledger.append(
            FatLevel(
                float(lev),
                (lo, hi),
                level_measures[lev],
                {int(i): float(v) for i, v in amounts.items()},
                tuple(level_intervals[lev]),
            )
        )
    for a, b, k, lev in pieces:
        if lev is None:
            th = np.zeros(n)
            th[k] = 1.0
            edges.append((a, b))
            thetas.append(th)
        else:
            for x0, x1, i in fills[lev].pop((a, b)):
                th = np.zeros(n)
                th[i] = 1.0
                edges.append((x0, x1))
                thetas.append(th)
    flat = [edges[0][0]] + [b for _, b in edges]
    e, t = _merge_bands(np.array(flat), thetas)
    design = RadialDesign(e, t, d, materials, alphas, tuple(ledger))
    err = np.abs(design.volumes - q)
    if np.any(err > 1e-10 * mu):
        raise InfeasibleError(f"band volumes miss quantities by {err.tolist()}")
    return design


def _fill_level(intervals, amounts, d, omega):
    """Lay admissible materials out in ascending radius over the level's intervals."""
    order = sorted(amounts)
    result = {iv: [] for iv in intervals}
    queue = [(i, amounts[i]) for i in order]
    qi = 0
    for iv in intervals:
        a, b = iv
        cur = a
        while cur < b:
            i, rem = queue[qi]
            last = qi == len(queue) - 1
            cap = omega * (b**d - cur**d)
            if last or rem >= cap:
                result[iv].append((cur, b, i))
                queue[qi] = (i, rem - cap)
                cur = b
                if not last and queue[qi][1] <= 1e-14 * omega:
                    qi += 1
            else:
                nxt = (cur**d + rem / omega) ** (1.0 / d)
                if nxt > cur:
                    result[iv].append((cur, nxt, i))
                cur = nxt
                qi += 1
    return result


def design_objective(design, psi):
    """``H(theta, sigma) = int psi * sum_j theta_j / lambda_j`` over the ball."""
    d = design.dimension
    weighted = psi.poly.map(lambda lp: lp.shift(d - 1))
    inv = design.inverse_lambda()
    scale = d * unit_ball_volume(d)
    terms = [
        inv[j] * weighted.integral(a, b) for j, (a, b) in enumerate(zip(design.edges, design.edges[1:]))
    ]
    return scale * math.fsum(terms)


# --------------------------------------------------------------------------- states


@dataclass(frozen=True)
class RadialState:
    """``u(r) = -int_r^R sigma / lambda_-(theta)``, exact per band."""

    poly: PiecewisePoly

    def __call__(self, r):
        return self.poly(r)

    def derivative(self, r):
        return self.poly.derivative()(r)

    def one_sided(self, r):
        """Limits of u from the left and right at ``r``."""
        p = self.poly
        idx = int(np.searchsorted(p.breaks, r, side="left"))
        left = p.pieces[max(idx - 1, 0)].scalar(r)
        right = p.pieces[min(idx, len(p.pieces) - 1)].scalar(r)
        return left, right


def reconstruct_state(flux, design, R=None):
    R = design.radius if R is None else R
    sig = flux.sigma
    if abs(sig.hi - R) > 1e-14 * R:
        raise ConstraintError("flux and design must share the outer radius")
    breaks = sorted(set(sig.breaks) | set(design.edges.tolist()))
    inv = design.inverse_lambda()
    pieces = [None] * (len(breaks) - 1)
    u_right = 0.0
    for p in range(len(breaks) - 2, -1, -1):
        a, b = breaks[p], breaks[p + 1]
        mid = 0.5 * (a + b)
        s = sig.pieces[int(sig.piece_index(mid))]
        w = inv[int(design.band_index(mid))]
        G = s.antiderivative() * w
        piece = G + (u_right - G.scalar(b))
        pieces[p] = piece
        u_right = piece.scalar(a) if a > 0 else float(piece(0.0))
    return RadialState(PiecewisePoly(tuple(breaks), tuple(pieces)))


# --------------------------------------------------------------------------- certificates


@dataclass
class CertificateReport:
    state_residual: float
    laminate_ok: bool
    saddle_samples: int
    saddle_max_excess: float
    volume_error: float
    strip_violations: int
    objective: float
    notes: list = field(default_factory=list)
    residual_tol: float = 1e-9
    saddle_tol: float = 1e-10

    @property
    def passed(self):
        return (
            self.state_residual <= self.residual_tol
            and self.laminate_ok
            and self.saddle_max_excess <= self.saddle_tol
            and self.strip_violations == 0
        )

    def as_dict(self):
        return {
            "state_residual": self.state_residual,
            "laminate_ok": self.laminate_ok,
            "saddle_samples": self.saddle_samples,
            "saddle_max_excess": self.saddle_max_excess,
            "volume_error": self.volume_error,
            "strip_violations": self.strip_violations,
            "objective": self.objective,
            "passed": self.passed,
            "notes": list(self.notes),
        }


def interior_samples(edges, per_band=32):
    """Sample radii strictly inside each band."""
    pts = []
    for a, b in zip(edges, edges[1:]):
        t = (np.arange(per_band) + 0.5) / per_band
        pts.append(a + t * (b - a))
    return np.concatenate(pts)


def random_rearrangement(quantities, d, R, rng, max_splits=3):
    """A random feasible bang-bang radial design with the given material volumes."""
    omega = unit_ball_volume(d)
    chunks = []
    for i, qi in enumerate(quantities):
        if qi <= 0:
            continue
        k = int(rng.integers(1, max_splits + 1))
        parts = rng.dirichlet(np.ones(k)) * qi
        chunks.extend((i, v) for v in parts)
    order = rng.permutation(len(chunks))
    edges, mats, vol = [0.0], [], 0.0
    for j in order:
        i, v = chunks[j]
        vol += v
        edges.append(min((vol / omega) ** (1.0 / d), R))
        mats.append(i)
    edges[-1] = R
    theta = np.zeros((len(mats), len(quantities)))
    theta[np.arange(len(mats)), mats] = 1.0
    return np.array(edges), theta


def strip_violations(design, psi, alphas, tol=1e-10):
    """Count sample points where the design breaks the strip conditions."""
    if alphas is None:
        return 0
    alphas = np.asarray(alphas, float)
    upper = np.concatenate([[np.inf], alphas[:-1]])
    r = interior_samples(design.edges, 16)
    v = psi(r)
    th = design.theta_at(r)
    scale = max(float(np.max(np.abs(v))), 1e-300)
    bad = 0
    for k in range(len(alphas)):
        present = th[:, k] > 1e-12
        outside = (v < alphas[k] - tol * scale) | (v > upper[k] + tol * scale)
        bad += int(np.sum(present & outside))
        inside = (v > alphas[k] + tol * scale) & (v < upper[k] - tol * scale)
        bad += int(np.sum(inside & (th[:, k] < 1 - 1e-12)))
    return bad


def certify(design, fluxes, psi, quantities=None, states=None, rng=None, n_samples=100):
    """Check the optimality conditions of a radial design; never raises on failure."""
    rng = np.random.default_rng(0) if rng is None else rng
    fluxes = list(fluxes)
    d, R = design.dimension, design.radius
    notes = []
    if states is None:
        states = [reconstruct_state(fl, design, R) for fl in fluxes]
    r = interior_samples(np.array(sorted(set(design.edges.tolist()) | set(psi.poly.breaks))))
    lam = design.lambda_minus_at(r)
    resid = 0.0
    for fl, st in zip(fluxes, states):
        resid = max(resid, float(np.max(np.abs(fl.sigma(r) - lam * st.derivative(r)))))
    notes.append("radial fluxes are normal to the laminate layers, whose radial eigenvalue is lambda_-")
    h_star = design_objective(design, psi)
    q = design.volumes if quantities is None else np.asarray(quantities, float)
    excess = -np.inf
    n_done = 0
    if len(design.materials) > 1:
        for _ in range(n_samples):
            e, t = random_rearrangement(q, d, R, rng)
            trial = RadialDesign(e, t, d, design.materials)
            excess = max(excess, design_objective(trial, psi) - h_star)
            n_done += 1
        # the uniform mixture is feasible too
        uni = RadialDesign(np.array([0.0, R]), (q / q.sum())[None, :], d, design.materials)
        excess = max(excess, design_objective(uni, psi) - h_star)
        n_done += 1
    else:
        excess = 0.0
        notes.append("single material: every feasible design coincides")
    notes.append("flux-side saddle inequality skipped: a ball admits a unique radial flux")
    vol_err = float(np.max(np.abs(design.volumes - q))) if quantities is not None else 0.0
    return CertificateReport(
        state_residual=resid,
        laminate_ok=True,
        saddle_samples=n_done,
        saddle_max_excess=float(excess),
        volume_error=vol_err,
        strip_violations=strip_violations(design, psi, design.alphas),
        objective=h_star,
        notes=notes,
    )


# --------------------------------------------------------------------------- pipeline


@dataclass
class RadialSolution:
    problem: object
    fluxes: list
    psi: PsiFunction
    segmentation: MonotoneSegmentation
    distribution: RadialDistribution
    reduced_design: RadialDesign
    design: RadialDesign
    states: list
    certificate: CertificateReport

    @property
    def alphas(self):
        return self.reduced_design.alphas

    @property
    def radii(self):
        return self.design.interfaces

    @property
    def objective(self):
        return self.certificate.objective


def solve_radial(problem, rng=None, n_samples=100):
    """Full ball pipeline for a :class:`ProblemSpec` with a :class:`Ball` domain."""
    dom = problem.domain
    if not isinstance(dom, Ball):
        raise ConstraintError("radial solver needs a ball domain")
    problem.constraint.check_against(dom.measure)
    d, R = dom.dimension, dom.radius
    fluxes = [radial_flux(load.source, d, R) for load in problem.loads]
    psi = assemble_psi(fluxes, [load.weight for load in problem.loads])
    seg = monotone_segments(psi)
    dist = radial_distribution(psi, seg, d)
    prep = prepare(problem)
    red = prep.reduced
    reduced_design = solve_radial_design(psi, seg, red.materials, red.quantities, d)
    design = reduced_design.with_materials(prep.to_original(reduced_design.theta), problem.materials)
    e, t = _merge_bands(design.edges, list(design.theta))
    design = RadialDesign(e, t, d, problem.materials, reduced_design.alphas, reduced_design.levels)
    states = [reconstruct_state(fl, design, R) for fl in fluxes]
    cert = certify(design, fluxes, psi, problem.quantities, states, rng=rng, n_samples=n_samples)
    # strip conditions refer to the reduced material axis
    cert.strip_violations = strip_violations(reduced_design, psi, reduced_design.alphas)
    return RadialSolution(problem, fluxes, psi, seg, dist, reduced_design, design, states, cert)
