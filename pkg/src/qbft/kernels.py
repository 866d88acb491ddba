"""Variation-diminishing kernel constructions.

A composite kernel is the transform of 1/E where E(t) = exp(c t^2) times a
finite product of zero factors (1 + t^2/a_k^2); the Gauss kernel family h_c
is a separate closed-form object whose transform is a q-exponential.  Both
produce positive, mass-one kernels whose convolution never increases the
sign-change count of a window function.

Lattice integrability of 1/E is a real constraint, not a formality: with
c = 0 the weighted head terms behave like q^(l(2nu+2-2Z)), so Z zero
factors give an L^1 profile only when 2Z > 2nu+2.  Below that the transform
sum still exists pointwise on the I/O window but the object has no kernel
calculus (no mass, no chain), and composite_kernel refuses it.
"""

import json

import mpmath
from mpmath import mp, mpf, mpmathify

from .core import (
    DECAY_RAPID, DECAY_UNKNOWN, DomainError, IntegrabilityError, InvalidParams,
    NoWitness, WindowError, GridFunction, QGrid, constants, decimal_str,
    qpochhammer_infinite, q_bessel_operator, _parse_number,
)
from .bessel import i_nu, _exponent_of, _lorentz_transform
from .transform import _matvec, _project, apply_multiplier, norm


class KernelSpec:
    """Recipe for a composite kernel: Gaussian weight c and zero scales.

    zeros must be positive and nondecreasing; tail_sum is the convergence
    functional sum(1/a_k^2) of the zero set.
    """

    def __init__(self, c, zeros):
        self.c_str = str(c) if not isinstance(c, float) else repr(c)
        self.zeros_str = tuple(str(a) if not isinstance(a, float) else repr(a)
                               for a in zeros)
        with mp.workdps(40):
            cv = _parse_number(self.c_str, "c")
            if cv < 0:
                raise InvalidParams("Gaussian weight c must be nonnegative")
            prev = mp.zero
            for a in self.zeros_str:
                av = _parse_number(a, "zero")
                if av <= 0:
                    raise InvalidParams("zero scales must be positive")
                if av < prev:
                    raise InvalidParams("zero scales must be nondecreasing")
                prev = av

    @property
    def c(self):
        return mpmathify(self.c_str)

    @property
    def zeros(self):
        return tuple(mpmathify(a) for a in self.zeros_str)

    def tail_sum(self):
        with mp.workdps(mp.dps + 5):
            return +mpmath.fsum(1 / (a * a) for a in self.zeros)

    def prefix(self, m):
        return KernelSpec(self.c_str, self.zeros_str[:m])

    def __repr__(self):
        return f"KernelSpec(c={self.c_str}, zeros={self.zeros_str})"


class KernelReport:
    """Kernel samples plus the evidence gathered while building them."""

    def __init__(self, spec, kernel, mass, mass_defect, min_value,
                 chain, monotone_chain_ok, gap_tol):
        self.spec = spec
        self.kernel = kernel
        self.mass = mass
        self.mass_defect = mass_defect
        self.min_value = min_value
        self.chain = chain  # list of {"prefix", "worst_gap", "at", "skipped"}
        self.monotone_chain_ok = monotone_chain_ok
        self.gap_tol = gap_tol

    def positive(self):
        return self.min_value > 0


def E_eval(t, spec, params):
    """E(t) = exp(c t^2) prod_k (1 + t^2 / a_k^2), the reciprocal multiplier."""
    with params.working(15):
        tv = _parse_number(t, "t")
        t2 = tv * tv
        val = mp.e ** (spec.c * t2) if spec.c != 0 else mp.one
        for a in spec.zeros:
            val *= (1 + t2 / (a * a))
        return +val

def _is_divergent(spec, params):
    with mp.workdps(30):
        return spec.c == 0 and 2 * len(spec.zeros_str) <= 2 * params.nu + 2

def _phi_vector(spec, plan):
    """1/E sampled on the plan's internal lattice."""
    params = plan.params
    with mp.workdps(plan.dps):
        q = params.q
        c = spec.c
        zs = spec.zeros
        vec = []
        for l in range(plan.lat_lo, plan.lat_hi + 1):
            t2 = q ** (2 * l)
            v = mp.e ** (-c * t2) if c != 0 else mp.one
            for a in zs:
                v /= (1 + t2 / (a * a))
            vec.append(v)
        return vec

def composite_kernel(spec, plan, chain=True, gap_tol=None):
    """Transform 1/E into kernel samples on the plan's output window.

    Reports the kernel's mass against the independent normalization
    1/E(0) = 1, its minimum sample, and, when the spec has several zeros,
    the pointwise comparison of the kernel against each shorter-prefix
    kernel (skipping prefixes that fail the integrability gate).
    """
    params = plan.params
    if _is_divergent(spec, params):
        z = len(spec.zeros_str)
        raise IntegrabilityError(
            f"1/E with c=0 and {z} zero factor(s) is not lattice-integrable "
            f"at nu={params.nu_str}; supply more zero factors")
    gap_tol = mpf("1e-25") if gap_tol is None else mpmathify(gap_tol)
    out = _matvec(plan, _phi_vector(spec, plan))
    kernel = _project(plan, out, DECAY_RAPID)
    with mp.workdps(plan.dps):
        q = params.q
        nu = params.nu
        c = constants(params.replace(precision_digits=plan.dps)).c_q_nu
        mass = c * (1 - q) * mpmath.fsum(
            q ** (mpf(n) * (2 * nu + 2)) * kernel.value_at(n)
            for n in kernel.grid.exponents())
        mass = +mass
        mass_defect = +abs(mass - 1)
        min_value = +min(kernel.values)
    chain_rows = []
    chain_ok = None
    if chain and len(spec.zeros_str) >= 2:
        chain_ok = True
        for m in range(1, len(spec.zeros_str)):
            sub = spec.prefix(m)
            if _is_divergent(sub, params):
                chain_rows.append({"prefix": m, "skipped": True,
                                   "worst_gap": None, "at": None})
                continue
            sub_out = _matvec(plan, _phi_vector(sub, plan))
            with mp.workdps(plan.dps):
                worst = None
                worst_at = None
                for n in kernel.grid.exponents():
                    gap = +(kernel.value_at(n) - sub_out[n - plan.lat_lo])
                    if worst is None or gap < worst:
                        worst = gap
                        worst_at = n
            chain_rows.append({"prefix": m, "skipped": False,
                               "worst_gap": worst, "at": worst_at})
            if worst < -gap_tol:
                chain_ok = False
    return KernelReport(spec, kernel, mass, mass_defect, min_value,
                        chain_rows, chain_ok, gap_tol)


def gauss_kernel(x, c, params):
    """Gauss kernel h_c(x), mass-one for every width c > 0.

    Evaluated through the reciprocal-product form of the q-exponential, which
    stays valid where the series form of e does not converge.  Its transform
    is e(-c^2 t^2; q^2).
    """
    with params.working(15):
        cv = _parse_number(c, "c")
        if cv <= 0:
            raise DomainError("Gauss kernel width must be positive")
        xv = _parse_number(x, "x")
        q = params.q
        nu = params.nu
        q2 = q * q
        c2 = cv * cv
        num = (qpochhammer_infinite(-q ** (2 * nu + 2) * c2, q2)
               * qpochhammer_infinite(-q ** (-2 * nu) / c2, q2))
        den = (qpochhammer_infinite(-c2, q2)
               * qpochhammer_infinite(-q2 / c2, q2))
        z = -q ** (-2 * nu) * xv * xv / c2
        return +(num / den / qpochhammer_infinite(z, q2))

def gauss_kernel_grid(c, params, grid=None):
    """Gauss kernel sampled on a window, tagged rapid."""
    grid = grid or QGrid()
    with params.working(10):
        q = params.q
        vals = [gauss_kernel(q ** n, c, params) for n in grid.exponents()]
    return GridFunction(grid, vals, DECAY_RAPID)


def approx_identity_run(f, plan, ns=(2, 4, 6, 8)):
    """Distances ||f - f * h_(q^n)||_1 for shrinking Gauss widths q^n.

    The convolutions go through the spectral multiplier e(-q^(2n) t^2; q^2)
    of the Gauss kernel.  For an approximate identity the distances must
    shrink as n grows.
    """
    params = plan.params
    q2 = None
    results = []
    ov_lo = max(f.grid.n_min, plan.out_grid.n_min)
    ov_hi = min(f.grid.n_max, plan.out_grid.n_max)
    if ov_lo > ov_hi:
        raise WindowError("input and output windows do not overlap")
    for n in ns:
        def mult(l, n=n):
            with mp.workdps(plan.dps):
                zq = params.q
                return 1 / qpochhammer_infinite(-zq ** (2 * n) * zq ** (2 * l),
                                                zq * zq)
        conv = apply_multiplier(plan, f, mult)
        with mp.workdps(plan.dps):
            diff = GridFunction(
                QGrid(ov_lo, ov_hi),
                [f.value_at(k) - conv.value_at(k) for k in range(ov_lo, ov_hi + 1)],
                DECAY_RAPID)
        results.append((n, norm(diff, 1, params)))
    return results


def order_diagnostic(G, params, candidates=None, points=16, slack="1e-8"):
    """Estimate the largest g_a enveloping G at infinity.

    Scans candidate scales a = q^m and checks that G/g_a is non-increasing
    over the `points` largest grid points of G's window; returns the largest
    passing a with its ratio profile.  Raises NoWitness when no candidate
    passes, which callers should treat as a diagnostic outcome.
    """
    if candidates is None:
        candidates = [params.q ** m for m in range(-8, 13)]
    points = min(points, len(G.grid))
    slack = mpmathify(slack)
    kcache = {}
    def k_at(e):
        if e not in kcache:
            kcache[e] = _lorentz_transform(e, 1, params)
        return kcache[e]
    best = None
    best_profile = None
    with params.working(10):
        q = params.q
        nu = params.nu
        exps = list(range(G.grid.n_min, G.grid.n_min + points))
        for a in candidates:
            m = _exponent_of(a, params, "candidate scale")
            scale = q ** (mpf(m) * (2 * nu + 2))
            ratios = []
            ok = True
            for n in exps:
                ga = scale * k_at(n + m)
                if ga == 0:
                    ok = False
                    break
                ratios.append(G.value_at(n) / ga)
            if not ok:
                continue
            # exps run from large x to small x; require non-increasing in x
            for i in range(len(ratios) - 1):
                if ratios[i] > ratios[i + 1] * (1 + slack):
                    ok = False
                    break
            if ok:
                av = mpmathify(a)
                if best is None or av > best:
                    best = +av
                    best_profile = [+r for r in ratios]
    if best is None:
        raise NoWitness(
            "no scanned scale a yields a non-increasing G/g_a tail profile")
    return best, best_profile


def factorization_check(h, a, params):
    """Both sides of the second-order factorization through i_nu.

    Left: (1 - Delta/a^2) h.  Right: -q^(2nu-1) (1-q)^2 / (a^2 x^(2nu+1)
    i_nu(ax)) times the inverse-shifted q-derivative of
    x^(2nu+1) i_nu(ax) i_nu(aqx) D_q[h / i_nu(a.)].
    Returns (lhs, rhs) on the window shrunk by one exponent at each edge.
    """
    if len(h.grid) < 3:
        raise WindowError("factorization check needs at least three grid points")
    ja = _exponent_of(a, params, "a")
    with params.working(25):
        q = params.q
        nu = params.nu
        av = params.q ** ja
        ivals = {n: i_nu(q ** (n + ja), params) for n in
                 range(h.grid.n_min, h.grid.n_max + 2)}
        def u(n):
            return h.value_at(n) / ivals[n]
        def dqu(n):
            return (u(n) - u(n + 1)) / ((1 - q) * q ** n)
        def w(n):
            return q ** (mpf(n) * (2 * nu + 1)) * ivals[n] * ivals[n + 1] * dqu(n)
        lhs_gf = q_bessel_operator(h, params)
        out_lo = h.grid.n_min + 1
        out_hi = h.grid.n_max - 1
        lhs = []
        rhs = []
        pref = -q ** (2 * nu - 1) * (1 - q) ** 2
        for n in range(out_lo, out_hi + 1):
            lhs.append(+(h.value_at(n) - lhs_gf.value_at(n) / (av * av)))
            ldw = (w(n - 1) - w(n)) / ((1 - q) * q ** (n - 1))
            rhs.append(+(pref * ldw / (av * av * q ** (mpf(n) * (2 * nu + 1))
                                       * ivals[n])))
    grid = QGrid(out_lo, out_hi)
    return (GridFunction(grid, lhs, DECAY_UNKNOWN),
            GridFunction(grid, rhs, DECAY_UNKNOWN))


# ---------------------------------------------------------------------------
# report serialization

def kernel_report_to_json(report, params, digits=None):
    d = digits or params.precision_digits + 10
    payload = {
        "spec": {"c": report.spec.c_str, "zeros": list(report.spec.zeros_str)},
        "mass": decimal_str(report.mass, d),
        "mass_defect": decimal_str(report.mass_defect, 10),
        "min_value": decimal_str(report.min_value, d),
        "monotone_chain_ok": report.monotone_chain_ok,
        "gap_tol": decimal_str(report.gap_tol, 5),
        "chain": [
            {"prefix": row["prefix"], "skipped": row["skipped"],
             "worst_gap": None if row["worst_gap"] is None
             else decimal_str(row["worst_gap"], 10),
             "at": row["at"]}
            for row in report.chain],
        "n_min": report.kernel.grid.n_min,
        "n_max": report.kernel.grid.n_max,
        "values": [decimal_str(v, d) for v in report.kernel.values],
    }
    return json.dumps(payload, indent=1)
