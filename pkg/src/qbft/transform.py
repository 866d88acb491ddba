"""The q-Bessel Fourier transform as a reusable lattice plan.

F f(x) = c (1-q) sum_n q^(n(2nu+2)) f(q^n) j_nu(x q^n) is a matrix acting on
window samples.  The transform is its own inverse, so one plan serves both
directions.  Building the matrix is the expensive step (thousands of
certified j evaluations); applying it is two dot products per output point.

The caller's window is only the I/O view.  The quadrature itself needs
lattice points outside it: a head on the large-t side deep enough that the
neglected oscillatory envelope of j is certified below the precision floor,
and a tail on the small-t side long enough for the weight q^(n(2nu+2)) to
reach it.  Plans therefore carry an extended internal lattice; inputs are
zero-embedded into it and outputs projected back.
"""

import json
import math

import mpmath
from mpmath import mp, mpf, mpmathify

from .core import (
    DECAY_INTEGRABLE, DECAY_RAPID,
    DomainError, InvalidParams, PreconditionError, WindowError,
    GridFunction, QGrid, QParams, constants, decimal_str,
)
from .bessel import decay_bound_log10, j_nu_lattice, _exponent_of


def plan_window(params, io_lo, io_hi):
    """Internal lattice bounds enclosing the I/O window [io_lo, io_hi]."""
    lq = params.log10_inv_q
    nu = params.nu_float
    head = -io_hi - 25
    tail = max(io_hi + 8,
               math.ceil(params.precision_digits / ((2 * nu + 2) * lq))
               + max(0, -io_lo) + 4)
    return head, tail


class TransformPlan:
    """Precomputed transform matrix over an extended internal lattice."""

    def __init__(self, params, in_grid, out_grid, lat_lo, lat_hi, jrow, dps):
        self.params = params
        self.in_grid = in_grid
        self.out_grid = out_grid
        self.lat_lo = lat_lo
        self.lat_hi = lat_hi
        self.jrow = jrow  # j samples indexed by exponent sum k+n
        self.dps = dps
        with mp.workdps(dps):
            q = params.q
            nu = params.nu
            c1q = constants(params.replace(precision_digits=dps)).c_q_nu * (1 - q)
            self.weights = {n: c1q * q ** (mpf(n) * (2 * nu + 2))
                            for n in range(lat_lo, lat_hi + 1)}
            self.rows = []
            for k in range(lat_lo, lat_hi + 1):
                self.rows.append([self.weights[n] * jrow[k + n]
                                  for n in range(lat_lo, lat_hi + 1)])

    def entry(self, k, n):
        """Matrix element for output exponent k, input exponent n (I/O view)."""
        if k not in self.out_grid or n not in self.in_grid:
            raise WindowError(f"entry ({k}, {n}) outside the plan's I/O window")
        return self.rows[k - self.lat_lo][n - self.lat_lo]

    def size(self):
        return self.lat_hi - self.lat_lo + 1

    def __repr__(self):
        return (f"TransformPlan(q={self.params.q_str}, nu={self.params.nu_str}, "
                f"io=[{self.in_grid.n_min},{self.in_grid.n_max}]->"
                f"[{self.out_grid.n_min},{self.out_grid.n_max}], "
                f"lattice=[{self.lat_lo},{self.lat_hi}])")


def build_plan(params, in_grid=None, out_grid=None):
    """Sample the j row and assemble the transform matrix.

    j values whose decay envelope already certifies them below the precision
    floor 10^-(digits+50) are stored as exact zeros instead of being
    evaluated; everything else is sampled at one coherent working precision.
    """
    in_grid = in_grid or QGrid()
    out_grid = out_grid or in_grid
    io_lo = min(in_grid.n_min, out_grid.n_min)
    io_hi = max(in_grid.n_max, out_grid.n_max)
    lat_lo, lat_hi = plan_window(params, io_lo, io_hi)
    dps = params.precision_digits + 15
    lq = params.log10_inv_q
    nu = params.nu_float
    floor = params.precision_digits + 50
    jrow = {}
    with mp.workdps(dps):
        for s in range(2 * lat_lo, 2 * lat_hi + 1):
            if s < 0 and (s * s - (2 * nu + 1) * s) * lq - 2 > floor:
                jrow[s] = mp.zero
            else:
                jrow[s] = +j_nu_lattice(s, params, dps)
    return TransformPlan(params, in_grid, out_grid, lat_lo, lat_hi, jrow, dps)


def _embed(plan, f):
    """Lift window samples onto the plan's internal lattice.

    If f carries full-lattice samples recorded by a previous fourier() call
    with the same lattice and parameters, those are used; otherwise the
    window samples are zero-extended.  The difference matters for functions
    whose off-window values meet large weights in the next application: a
    transform's head samples are individually tiny but carry order-one mass
    once multiplied by q^(n(2nu+2)), and dropping them blurs sharp features
    of the original function on the small-x side.
    """
    cached = getattr(f, "_lattice_cache", None)
    if cached is not None and cached[0] == (plan.lat_lo, plan.lat_hi, plan.params):
        return list(cached[1])
    if f.grid.n_min < plan.lat_lo or f.grid.n_max > plan.lat_hi:
        raise WindowError(
            f"function window [{f.grid.n_min}, {f.grid.n_max}] exceeds the "
            f"plan lattice [{plan.lat_lo}, {plan.lat_hi}]")
    vec = [mp.zero] * plan.size()
    base = f.grid.n_min - plan.lat_lo
    for i, v in enumerate(f.values):
        vec[base + i] = v
    return vec

def _attach_lattice(plan, f, vec):
    """Record full-lattice samples on f for later same-plan reuse."""
    f._lattice_cache = ((plan.lat_lo, plan.lat_hi, plan.params), vec)
    return f

def _matvec(plan, vec):
    with mp.workdps(plan.dps):
        return [mpmath.fdot(row, vec) for row in plan.rows]

def _project(plan, vec, decay_class):
    lo = plan.out_grid.n_min - plan.lat_lo
    hi = plan.out_grid.n_max - plan.lat_lo
    return GridFunction(plan.out_grid, vec[lo:hi + 1], decay_class)

def _require_transformable(f):
    if f.decay_class not in (DECAY_RAPID, DECAY_INTEGRABLE):
        raise PreconditionError(
            f"transform needs rapid or integrable decay, got {f.decay_class!r}")


def fourier(f, plan):
    """Apply the transform; result sampled on the plan's output window.

    The output is a finite combination of j columns, each of which decays
    like q^(k^2) on the large-x side, so the result is tagged rapid.  It
    also keeps its own off-window lattice samples, so composing fourier()
    with itself through the same plan inverts sharp-edged inputs at full
    accuracy instead of being limited by the window view.
    """
    _require_transformable(f)
    out = _matvec(plan, _embed(plan, f))
    return _attach_lattice(plan, _project(plan, out, DECAY_RAPID), out)

def apply_multiplier(plan, f, multiplier):
    """Transform f, scale the spectrum pointwise, transform back.

    multiplier maps an internal lattice exponent l to the spectral factor at
    t = q^l.  The pointwise products run at the plan's working precision;
    letting them run at ambient precision corrupts results far above the
    precision floor.
    """
    _require_transformable(f)
    spec = _matvec(plan, _embed(plan, f))
    with mp.workdps(plan.dps):
        scaled = [spec[i] * multiplier(plan.lat_lo + i) for i in range(plan.size())]
    out = _matvec(plan, scaled)
    return _attach_lattice(plan, _project(plan, out, DECAY_RAPID), out)


def triple_kernel(x, y, z, params):
    """Symmetric positive-measure kernel coupling three lattice points.

    D(x, y, z) = c^2 (1-q) sum_l q^(l(2nu+2)) j(x q^l) j(y q^l) j(z q^l).
    Its weighted z-marginal integrates to exactly 1, which is what makes the
    translation operator mass-preserving.  Arguments are lattice points.
    """
    kx = _exponent_of(x, params, "x")
    ky = _exponent_of(y, params, "y")
    kz = _exponent_of(z, params, "z")
    lq = params.log10_inv_q
    nu = params.nu_float
    digits = params.precision_digits
    kmin = min(kx, ky, kz)
    m = max(0, -kmin)
    est = (m * m + (2 * nu + 1) * m + 8) * lq if m > 0 else 3.0
    dps = int(digits + 3 * est + 30)
    l_hi = math.ceil((est + digits + 12) / ((2 * nu + 2) * lq)) + 2
    floor_log10 = -(est + digits + 10)
    def head_bound(l):
        total = -l * (2 * nu + 2) * lq
        for k in (kx, ky, kz):
            total += decay_bound_log10(k + l, params)
        return total
    l_lo = -4
    guard = 0
    while head_bound(l_lo) > floor_log10 and guard < 4000:
        l_lo -= 1
        guard += 1
    with mp.workdps(dps):
        q = params.q
        nuv = params.nu
        c = constants(params.replace(precision_digits=dps)).c_q_nu
        terms = []
        for l in range(l_lo, l_hi + 1):
            w = q ** (mpf(l) * (2 * nuv + 2))
            terms.append(w * j_nu_lattice(kx + l, params, dps)
                         * j_nu_lattice(ky + l, params, dps)
                         * j_nu_lattice(kz + l, params, dps))
        return +(c * c * (1 - q) * mpmath.fsum(terms))


def translate(f, x, plan):
    """Generalized translation T_x f via the spectral route.

    T_x f = F[ j_nu(x .) F f ]: transform, multiply by the j column at x,
    transform back.  x must be a lattice point.
    """
    m = _exponent_of(x, plan.params, "x")
    dps = plan.dps
    def mult(l):
        return _j_or_zero(m + l, plan.params, dps)
    return apply_multiplier(plan, f, mult)

def _j_or_zero(s, params, dps):
    """j sample with the same envelope flooring rule used by plan builds."""
    lq = params.log10_inv_q
    nu = params.nu_float
    if s < 0 and (s * s - (2 * nu + 1) * s) * lq - 2 > params.precision_digits + 50:
        return mp.zero
    return j_nu_lattice(s, params, dps)


def convolve(f, g, plan):
    """q-convolution by the spectral route: F(f * g) = F f . F g.

    Both inputs are zero-embedded into the plan lattice; the product of the
    two spectra is transformed back and read off on the output window.
    """
    _require_transformable(f)
    _require_transformable(g)
    fh = _matvec(plan, _embed(plan, f))
    gh = _matvec(plan, _embed(plan, g))
    with mp.workdps(plan.dps):
        prod = [a * b for a, b in zip(fh, gh)]
    out = _matvec(plan, prod)
    return _attach_lattice(plan, _project(plan, out, DECAY_RAPID), out)

def convolve_direct(f, g, plan):
    """q-convolution by the definitional route, as an independent oracle.

    f * g(x) = c integral of T_x f(y) g(y) y^(2nu+1) d_q y.  The translation
    values come from per-point spectral synthesis restricted to g's support,
    so no step of this path shares code with convolve()'s product-of-spectra
    shortcut beyond the plan matrix itself.
    """
    _require_transformable(f)
    _require_transformable(g)
    params = plan.params
    fh = _matvec(plan, _embed(plan, f))
    sup = [n for n in g.grid.exponents() if g.value_at(n) != 0]
    if not sup:
        return GridFunction.zero(plan.out_grid)
    with mp.workdps(plan.dps):
        q = params.q
        nu = params.nu
        c = constants(params.replace(precision_digits=plan.dps)).c_q_nu
        out = []
        for k in plan.out_grid.exponents():
            mult = [fh[i] * _j_or_zero(k + plan.lat_lo + i, params, plan.dps)
                    for i in range(plan.size())]
            total = mp.zero
            for n in sup:
                t_here = mpmath.fdot(plan.rows[n - plan.lat_lo], mult)
                total += q ** (mpf(n) * (2 * nu + 2)) * t_here * g.value_at(n)
            out.append(+(c * (1 - q) * total))
    return GridFunction(plan.out_grid, out, DECAY_RAPID)


class LpNorm:
    """Norm selector: exponent p >= 1 or 'inf', measure weighted or plain."""

    def __init__(self, p, weighted=True):
        if p != "inf":
            with mp.workdps(30):
                pv = mpmathify(p)
                if not pv >= 1:
                    raise InvalidParams("norm exponent must satisfy p >= 1")
        self.p = p
        self.weighted = weighted


def norm(f, lp, params):
    """L^p norm of window samples against the lattice measure.

    Weighted means the measure x^(2nu+1) d_q x of the transform calculus;
    plain means d_q x.  The sup norm ignores the measure.
    """
    if not isinstance(lp, LpNorm):
        lp = LpNorm(lp)
    with params.working(10):
        if lp.p == "inf" or lp.p == mp.inf:
            return +max((abs(v) for v in f.values), default=mp.zero)
        q = params.q
        nu = params.nu
        pv = mpmathify(lp.p)
        terms = []
        for n in f.grid.exponents():
            w = q ** (mpf(n) * (2 * nu + 2)) if lp.weighted else q ** mpf(n)
            terms.append(w * abs(f.value_at(n)) ** pv)
        return +(((1 - q) * mpmath.fsum(terms)) ** (1 / pv))


# ---------------------------------------------------------------------------
# plan serialization (cache format)

def plan_to_json(plan):
    """Serialize the sampled j row; the matrix is rebuilt on load."""
    d = plan.dps + 5
    payload = {
        "q": plan.params.q_str,
        "nu": plan.params.nu_str,
        "precision_digits": plan.params.precision_digits,
        "tol": plan.params.tol_str,
        "in_grid": [plan.in_grid.n_min, plan.in_grid.n_max],
        "out_grid": [plan.out_grid.n_min, plan.out_grid.n_max],
        "lattice": [plan.lat_lo, plan.lat_hi],
        "dps": plan.dps,
        "jrow": {str(s): decimal_str(v, d) for s, v in plan.jrow.items()},
    }
    return json.dumps(payload)

def plan_from_json(text):
    try:
        payload = json.loads(text)
        params = QParams(q=payload["q"], nu=payload["nu"],
                         precision_digits=int(payload["precision_digits"]),
                         tol=payload["tol"])
        in_grid = QGrid(*payload["in_grid"])
        out_grid = QGrid(*payload["out_grid"])
        lat_lo, lat_hi = payload["lattice"]
        dps = int(payload["dps"])
        with mp.workdps(dps + 5):
            jrow = {int(s): mpmathify(v) for s, v in payload["jrow"].items()}
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidParams(f"malformed plan payload: {exc}")
    return TransformPlan(params, in_grid, out_grid, lat_lo, lat_hi, jrow, dps)
