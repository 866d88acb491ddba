"""One-shot verification suite for the library's primary guarantees.

Each criterion is a self-contained check producing a pass/fail verdict with
a scalar measure against its stated threshold.  The suite is shared by the
command line (`qbft verify`) and the acceptance tests, so there is exactly
one implementation of every check.

Criterion 8 (pointwise domination within a kernel chain) fails by
measurement, not by defect: the inequality it asserts does not hold on the
small-x half of the window, where same-mass kernels must cross.  The
criterion is still computed faithfully and reported as the violation it is.
"""

import json
import time

import mpmath
from mpmath import mp, mpf

from .core import QGrid, QParams, GridFunction, DECAY_RAPID
from .bessel import d_nu, j_nu_lattice, _lorentz_transform
from .transform import (
    build_plan, convolve_direct, fourier, norm, _embed, _matvec, _project,
)
from .kernels import (
    KernelSpec, approx_identity_run, composite_kernel, gauss_kernel_grid,
    _phi_vector,
)
from .variation import Qn_polynomial, omega_series, real_roots_check, vd_check
from .corpus import load_corpus, REFERENCE_GRID

ALL_NUS = ("-0.5", "0", "0.5", "1")
REFERENCE_NU = "0.5"

CRITERIA = {
    1: "transform inversion on the corpus",
    2: "norm preservation on the rapid-decay subset",
    3: "eigenfunction and resolvent residuals",
    4: "kernel positivity and the Lorentz transform pair",
    5: "constancy and positivity of d_nu",
    6: "convolution theorem across independent routes",
    7: "variation diminishing under five kernels",
    8: "pointwise domination within a kernel chain",
    9: "spectrum inversion and limit-polynomial real-rootedness",
    10: "approximate-identity contraction",
}

EXPECTED_FAIL = {8}


class CriterionResult:
    def __init__(self, ident, passed, measure, threshold, seconds, detail=""):
        self.ident = ident
        self.title = CRITERIA[ident]
        self.passed = passed
        self.measure = measure
        self.threshold = threshold
        self.seconds = seconds
        self.detail = detail
        self.expected_fail = ident in EXPECTED_FAIL

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        extra = " (known violation)" if (not self.passed and self.expected_fail) else ""
        return (f"criterion {self.ident:2d} [{self.title}]: {verdict}  "
                f"measure={self.measure} vs {self.threshold}  "
                f"({self.seconds:.1f}s){extra}")


class SuiteReport:
    def __init__(self, results, seconds, params):
        self.results = results
        self.seconds = seconds
        self.params = params

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def lines(self):
        out = [r.line() for r in self.results]
        verdict = "ALL PASS" if self.passed else "VIOLATIONS PRESENT"
        out.append(f"suite: {verdict} ({self.seconds:.1f}s total)")
        return out

    def to_json(self):
        return json.dumps({
            "passed": self.passed,
            "seconds": round(self.seconds, 2),
            "params": {"q": self.params.q_str,
                       "precision_digits": self.params.precision_digits,
                       "tol": self.params.tol_str},
            "results": [{
                "criterion": r.ident, "title": r.title, "passed": r.passed,
                "expected_fail": r.expected_fail, "measure": str(r.measure),
                "threshold": str(r.threshold), "seconds": round(r.seconds, 2),
                "detail": r.detail,
            } for r in self.results],
        }, indent=1)


def _nstr(x, n=6):
    with mp.workdps(20):
        return mp.nstr(mpf(x) if not isinstance(x, mpf) else x, n)


class _Context:
    """Shared plans and corpus for one suite run."""

    def __init__(self, precision_digits=60, tol="1e-40", window=None):
        self.window = window or REFERENCE_GRID
        self.digits = precision_digits
        self.tol = tol
        self._plans = {}
        self.corpus = load_corpus(precision_digits, tol)

    def params(self, nu):
        return QParams(q="0.5", nu=nu, precision_digits=self.digits, tol=self.tol)

    def plan(self, nu):
        if nu not in self._plans:
            self._plans[nu] = build_plan(self.params(nu), self.window)
        return self._plans[nu]


def _rel_sup_distance(f, g, window):
    """max |f - g| / max |f| over a common window of exponents."""
    with mp.workdps(40):
        sup = max(abs(f.value_at(n)) for n in window)
        worst = max(abs(f.value_at(n) - g.value_at(n)) for n in window)
        return +(worst / sup)


def _criterion_1(ctx):
    threshold = mpf("1e-25")
    worst = mp.zero
    t0 = time.time()
    for nu in ALL_NUS:
        plan = ctx.plan(nu)
        for entry in ctx.corpus:
            back = fourier(fourier(entry.f, plan), plan)
            r = _rel_sup_distance(entry.f, back, entry.f.grid.exponents())
            if r > worst:
                worst = r
    elapsed = time.time() - t0
    ok = worst <= threshold and elapsed < 60
    detail = f"48 double transforms, sup-norm relative; time bound 60s"
    return CriterionResult(1, ok, _nstr(worst), f"<= {_nstr(threshold)}",
                           elapsed, detail)

def _criterion_2(ctx):
    threshold = mpf("1e-25")
    worst = mp.zero
    t0 = time.time()
    for nu in ALL_NUS:
        plan = ctx.plan(nu)
        params = ctx.params(nu)
        for entry in ctx.corpus:
            if not entry.plancherel:
                continue
            # the corpus member vanishes off its window, so norm() over the
            # window is its exact whole-line norm; the spectrum spreads over
            # the entire lattice, so its norm must be summed there
            with mp.workdps(ctx.digits + 10):
                q = params.q
                nuv = params.nu
                n_f = norm(entry.f, 2, params)
                vec = _matvec(plan, _embed(plan, entry.f))
                total = mpmath.fsum(
                    q ** (mpf(plan.lat_lo + i) * (2 * nuv + 2)) * vec[i] ** 2
                    for i in range(plan.size()))
                n_t = mp.sqrt((1 - q) * total)
                r = abs(n_f - n_t) / n_f
            if r > worst:
                worst = r
    return CriterionResult(2, worst <= threshold, _nstr(worst),
                           f"<= {_nstr(threshold)}", time.time() - t0,
                           "2-norm of f vs its whole-lattice spectrum, all four nu")

def _criterion_3(ctx):
    threshold = mpf("1e-25")
    worst = mp.zero
    t0 = time.time()
    for nu in ALL_NUS:
        params = ctx.params(nu)
        dps = ctx.digits + 30
        with mp.workdps(dps):
            q = params.q
            nuv = params.nu
            co = 1 + q ** (2 * nuv)
            for a_exp in (2, 0, -2):
                a2 = q ** (2 * a_exp)
                # eigenfunction side: the operator acts as -a^2 on j(a.)
                v = {n: j_nu_lattice(a_exp + n, params, dps)
                     for n in range(-13, 26)}
                for n in range(-12, 25):
                    stencil = q ** (-2 * n) * (v[n - 1] - co * v[n]
                                               + q ** (2 * nuv) * v[n + 1])
                    res = abs(stencil + a2 * v[n])
                    scale = (q ** (-2 * n) * (abs(v[n - 1]) + co * abs(v[n])
                                              + q ** (2 * nuv) * abs(v[n + 1]))
                             + a2 * abs(v[n]))
                    r = res / scale
                    if r > worst:
                        worst = r
                # resolvent side: (1 - Delta/a^2) g_a vanishes on the lattice
                a = q ** a_exp
                w = {n: _lorentz_transform(n, a, params)
                     for n in range(-5, 12)}
                for n in range(-4, 11):
                    stencil = q ** (-2 * n) * (w[n - 1] - co * w[n]
                                               + q ** (2 * nuv) * w[n + 1])
                    res = abs(w[n] - stencil / a2)
                    scale = (abs(w[n])
                             + q ** (-2 * n) * (abs(w[n - 1]) + co * abs(w[n])
                                                + q ** (2 * nuv) * abs(w[n + 1])) / a2)
                    r = res / scale
                    if r > worst:
                        worst = r
    return CriterionResult(3, worst <= threshold, _nstr(worst),
                           f"<= {_nstr(threshold)}", time.time() - t0,
                           "stencil residuals against local scale, a in {q^2, 1, q^-2}")

def _ga_samples(params, a_exp, grid):
    """Per-point adaptive g_a on a window, flooring certified-tiny values."""
    lq = params.log10_inv_q
    nu = params.nu_float
    vals = []
    with params.working(15):
        a = params.q ** a_exp
        for n in grid.exponents():
            m = max(0, -(n + a_exp))
            est = ((m * m + (2 * nu + 1) * m) + 8) * lq if m > 0 else 3.0
            if m > 0 and est - 12 > params.precision_digits + 40:
                vals.append(mp.zero)
            else:
                vals.append(_lorentz_transform(n, a, params))
    return GridFunction(grid, vals, DECAY_RAPID)

def _criterion_4(ctx):
    thr_pair = mpf("1e-20")
    t0 = time.time()
    positive = True
    worst_pair = mp.zero
    for nu in ALL_NUS:
        params = ctx.params(nu)
        plan = ctx.plan(nu)
        kv = _ga_samples(params, 0, ctx.window)
        with mp.workdps(40):
            lqf = params.log10_inv_q
            nuf = params.nu_float
            for n in ctx.window.exponents():
                m = max(0, -n)
                est = ((m * m + (2 * nuf + 1) * m) + 8) * lqf if m > 0 else 3.0
                if m > 0 and est - 12 > params.precision_digits + 40:
                    continue  # floored sample, positivity certified by the bound
                if kv.value_at(n) <= 0:
                    positive = False
        interior = range(ctx.window.n_min + 8, ctx.window.n_max - 7)
        # the pair check samples g_a over the whole plan lattice: g_a levels
        # off to a positive constant at small x, and for slow measure weights
        # (nu near -1) the mass beyond the window still moves the quadrature
        # at every small-x output point
        full = QGrid(plan.lat_lo, plan.lat_hi)
        for a_exp in (2, 0, -2):
            g = _ga_samples(params, a_exp, full)
            spec = fourier(g, plan)
            with mp.workdps(ctx.digits + 10):
                q = params.q
                a2 = q ** (2 * a_exp)
                d = max(abs(spec.value_at(k) - 1 / (1 + q ** (2 * k) / a2))
                        for k in interior)
            if d > worst_pair:
                worst_pair = d
    ok = positive and worst_pair <= thr_pair
    return CriterionResult(
        4, ok, f"positivity={positive}, pair={_nstr(worst_pair)}",
        f"positive and <= {_nstr(thr_pair)}", time.time() - t0,
        "per-point kernel positivity on the window; F(g_a) vs Lorentz profile")

def _criterion_5(ctx):
    threshold = mpf("1e-20")
    t0 = time.time()
    worst_spread = mp.zero
    all_positive = True
    values = []
    for nu in ALL_NUS:
        mean, spread = d_nu(ctx.params(nu), with_spread=True)
        values.append((nu, mean))
        if spread > worst_spread:
            worst_spread = spread
        if not mean > 0:
            all_positive = False
    ok = all_positive and worst_spread <= threshold
    detail = ", ".join(f"d({nu})={_nstr(v, 8)}" for nu, v in values)
    return CriterionResult(5, ok,
                           f"spread={_nstr(worst_spread)}, positive={all_positive}",
                           f"<= {_nstr(threshold)} and positive",
                           time.time() - t0, detail)

CONVOLUTION_PAIRS = [
    ("lorentz_1", "lorentz_q2"),
    ("lorentz_1", "gauss_1"),
    ("step_one_flip", "lorentz_1"),
    ("step_three_flips", "gauss_half"),
    ("const_plus", "lorentz_qm2"),
    ("alternating_burst", "lorentz_1"),
]

def _criterion_6(ctx):
    threshold = mpf("1e-20")
    t0 = time.time()
    plan = ctx.plan(REFERENCE_NU)
    by_name = {e.name: e.f for e in ctx.corpus}
    worst = mp.zero
    interior = range(ctx.window.n_min + 8, ctx.window.n_max - 7)
    for name_f, name_g in CONVOLUTION_PAIRS:
        f = by_name[name_f]
        g = by_name[name_g]
        direct = convolve_direct(f, g, plan)
        lhs = fourier(direct, plan)
        ff = fourier(f, plan)
        fg = fourier(g, plan)
        with mp.workdps(plan.dps):
            scale = max(abs(ff.value_at(k) * fg.value_at(k)) for k in interior)
            d = max(abs(lhs.value_at(k) - ff.value_at(k) * fg.value_at(k))
                    for k in interior)
            r = +(d / scale)
        if r > worst:
            worst = r
    return CriterionResult(6, worst <= threshold, _nstr(worst),
                           f"<= {_nstr(threshold)}", time.time() - t0,
                           "spectrum of the definitional convolution vs product "
                           "of spectra, six corpus pairs")

def _vd_kernels(ctx):
    """The five kernels of the variation check, as window samples."""
    plan = ctx.plan(REFERENCE_NU)
    params = ctx.params(REFERENCE_NU)
    with mp.workdps(40):
        q_str = mp.nstr(params.q, 20)
    g_q = _project(plan, _matvec(plan, _phi_vector(KernelSpec("0", (q_str,)), plan)),
                   DECAY_RAPID)
    g_1 = _project(plan, _matvec(plan, _phi_vector(KernelSpec("0", ("1",)), plan)),
                   DECAY_RAPID)
    h = gauss_kernel_grid("0.5", params, ctx.window)
    comp12 = composite_kernel(KernelSpec("0", ("1", "2")), plan, chain=False).kernel
    comp25 = composite_kernel(KernelSpec("0.25", ("1",)), plan, chain=False).kernel
    return [("g_q", g_q), ("g_1", g_1), ("gauss_0.5", h),
            ("composite_0_(1,2)", comp12), ("composite_0.25_(1)", comp25)]

def _criterion_7(ctx):
    t0 = time.time()
    plan = ctx.plan(REFERENCE_NU)
    violations = 0
    checks = 0
    worst_excess = 0
    for kname, kernel in _vd_kernels(ctx):
        report = vd_check(kernel, [e.f for e in ctx.corpus], plan,
                          names=[e.name for e in ctx.corpus])
        for row in report.rows:
            checks += 1
            excess = row["v_out"] - row["v_in"]
            if excess > worst_excess:
                worst_excess = excess
            if not row["ok"]:
                violations += 1
    ok = violations == 0
    return CriterionResult(7, ok, f"{violations} violations in {checks} checks",
                           "zero violations", time.time() - t0,
                           f"worst variation excess {worst_excess}")

def _criterion_8(ctx):
    t0 = time.time()
    plan = ctx.plan(REFERENCE_NU)
    report = composite_kernel(KernelSpec("0", ("1", "2", "4")), plan, chain=True)
    compared = [row for row in report.chain if not row["skipped"]]
    skipped = [row["prefix"] for row in report.chain if row["skipped"]]
    with mp.workdps(20):
        worst = min((row["worst_gap"] for row in compared), default=mp.zero)
    ok = report.monotone_chain_ok is True
    detail = (f"prefixes skipped by integrability: {skipped}; "
              + "; ".join(f"vs prefix {row['prefix']}: worst gap "
                          f"{_nstr(row['worst_gap'])} at n={row['at']}"
                          for row in compared))
    return CriterionResult(8, ok, f"worst gap {_nstr(worst)}",
                           ">= -1e-25 pointwise", time.time() - t0, detail)

def _criterion_9(ctx):
    threshold = mpf("1e-10")
    t0 = time.time()
    plan = ctx.plan(REFERENCE_NU)
    params = ctx.params(REFERENCE_NU)
    kernel = composite_kernel(KernelSpec("0", ("1", "2")), plan, chain=False).kernel
    w = omega_series(kernel, plan, 4).coefficients
    with mp.workdps(40):
        targets = [mpf(1), mpf("1.25"), mpf("0.25")]
        worst = max(abs(w[j] - targets[j]) / targets[j] for j in range(3))
    roots_ok = True
    max_imag = mp.zero
    for n in (1, 2):
        rep = real_roots_check(Qn_polynomial(w, n, params), params, "1e-20")
        roots_ok = roots_ok and rep.all_real
        if rep.max_imag > max_imag:
            max_imag = rep.max_imag
    ok = worst <= threshold and roots_ok
    return CriterionResult(
        9, ok, f"coeff rel err {_nstr(worst)}, real-rooted={roots_ok}",
        f"<= {_nstr(threshold)} and real-rooted", time.time() - t0,
        f"recovered w = ({_nstr(w[0], 12)}, {_nstr(w[1], 12)}, {_nstr(w[2], 12)}); "
        f"max imaginary part {_nstr(max_imag)}")

def _criterion_10(ctx):
    t0 = time.time()
    plan = ctx.plan(REFERENCE_NU)
    f = next(e.f for e in ctx.corpus if e.name == "lorentz_1")
    runs = approx_identity_run(f, plan, (2, 4, 6, 8))
    with mp.workdps(30):
        dists = [d for _, d in runs]
        strict = all(dists[i] > dists[i + 1] for i in range(len(dists) - 1))
        positive = all(d > 0 for d in dists)
    ok = strict and positive
    detail = ", ".join(f"n={n}: {_nstr(d)}" for n, d in runs)
    return CriterionResult(10, ok, "strictly decreasing" if ok else "not decreasing",
                           "strict decrease over n=2,4,6,8", time.time() - t0, detail)


_RUNNERS = {
    1: _criterion_1, 2: _criterion_2, 3: _criterion_3, 4: _criterion_4,
    5: _criterion_5, 6: _criterion_6, 7: _criterion_7, 8: _criterion_8,
    9: _criterion_9, 10: _criterion_10,
}


def run_suite(only=None, precision_digits=60, tol="1e-40", window=None,
              progress=None):
    """Run the requested criteria (default: all ten) and collect a report."""
    idents = sorted(only) if only else sorted(_RUNNERS)
    bad = [i for i in idents if i not in _RUNNERS]
    if bad:
        raise ValueError(f"unknown criteria: {bad}")
    ctx = _Context(precision_digits, tol, window)
    results = []
    t0 = time.time()
    for i in idents:
        res = _RUNNERS[i](ctx)
        results.append(res)
        if progress:
            progress(res.line())
    return SuiteReport(results, time.time() - t0, ctx.params(REFERENCE_NU))
