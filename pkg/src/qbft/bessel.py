"""q-Bessel special functions on the geometric lattice.

The normalized oscillatory function j_nu drives the transform; the modified
all-positive companion i_nu enters Wronskian-type identities; K_nu is the
positive kernel obtained by transforming the Lorentz profile (1+t^2)^-1, and
g_a its scaled family.  The Wronskian-like constant d_nu ties K and i
together and must come out grid-independent.

j_nu evaluations near x = q^s with s very negative suffer catastrophic
cancellation (the value sits at scale q^(s^2) while series terms reach scale
q^(-s^2)); evaluation therefore runs on a precision ladder with an explicit
cancellation certificate, and lattice-indexed callers use an envelope bound
to pick the working precision up front.
"""

import math

import mpmath
from mpmath import mp, mpf, mpmathify

from .core import (
    DomainError, Overflow, PrecisionExhausted, ConstancyViolation, WindowError,
    QGrid, constants, qpochhammer_infinite, _parse_number,
)


class BesselEval:
    """Certified series evaluation: value plus the evidence for trusting it."""

    def __init__(self, value, terms_used, max_term_magnitude, precision_used):
        self.value = value
        self.terms_used = terms_used
        self.max_term_magnitude = max_term_magnitude
        self.precision_used = precision_used

    def digits_lost(self):
        """Decimal digits cancelled between the largest term and the result."""
        if self.value == 0 or self.max_term_magnitude == 0:
            return float(self.precision_used)
        with mp.workdps(30):
            return max(0.0, float(mp.log10(self.max_term_magnitude / abs(self.value))))

    def __repr__(self):
        with mp.workdps(10):
            return (f"BesselEval({mp.nstr(self.value, 8)}, terms={self.terms_used}, "
                    f"lost~{self.digits_lost():.0f}, dps={self.precision_used})")


def bound_constant(params):
    """Envelope constant for |j_nu| on the large-argument side."""
    with params.working(15):
        q = params.q
        nu = params.nu
        q2 = q * q
        return +(qpochhammer_infinite(-q2, q2)
                 * qpochhammer_infinite(-q ** (2 * nu + 2), q2)
                 / qpochhammer_infinite(q ** (2 * nu + 2), q2))

def decay_bound_log10(s, params):
    """log10 of the envelope bound for |j_nu(q^s)|; quadratic decay for s < 0."""
    lq = params.log10_inv_q
    nu = params.nu_float
    base = 2.0  # generous stand-in for log10 of the envelope constant
    if s >= 0:
        return base
    return base - (s * s - (2 * nu + 1) * s) * lq


def _jnu_series(x2, params, dps):
    """One ladder rung: the alternating series at fixed working precision."""
    with mp.workdps(dps):
        q = params.q
        nu = params.nu
        q2 = q * q
        term = mp.one
        total = mp.zero
        max_term = mp.one
        floor = mpf(10) ** (-dps - 3)
        n = 0
        below = 0
        while below < 40:
            total += term
            at = abs(term)
            if at > max_term:
                max_term = at
            ratio = -(q2 ** (n + 1)) * x2 / ((1 - q ** (2 * nu + 2 + 2 * n))
                                             * (1 - q2 ** (n + 1)))
            term *= ratio
            n += 1
            scale = max_term if max_term > abs(total) else abs(total)
            below = below + 1 if abs(term) < floor * scale else 0
        return BesselEval(+total, n, +max_term, dps)

def j_nu(x, params):
    """Normalized q-Bessel function j_nu(x; q^2), certified.

    Runs the series on the precision ladder (digits, 2x, 4x, 8x) until the
    cancellation certificate holds: the digits lost to cancellation plus the
    target precision must fit inside the rung, with ten digits to spare.
    Raises PrecisionExhausted when even the top rung cannot certify.
    """
    with mp.workdps(40):
        xv = _parse_number(x, "x")
        if xv < 0:
            raise DomainError("j_nu is evaluated for x >= 0")
    d = params.precision_digits
    for rung in (d, 2 * d, 4 * d, 8 * d):
        with mp.workdps(rung + 10):
            x2 = _parse_number(x, "x") ** 2
        ev = _jnu_series(x2, params, rung + 10)
        if ev.digits_lost() + d + 10 <= ev.precision_used:
            return ev
    raise PrecisionExhausted(
        f"j_nu({x}) cancellation exceeds the precision ladder "
        f"(lost ~{ev.digits_lost():.0f} digits at {ev.precision_used} dps)")


_lattice_cache = {}

def j_nu_lattice(s, params, digits=None):
    """j_nu(q^s; q^2) for integer s, sized from the envelope bound.

    The cancellation allowance is computed up front from the decay envelope,
    so no ladder probing is needed; results are cached per precision rung so
    a whole plan build samples every j value at one coherent precision.
    """
    if not isinstance(s, int):
        raise DomainError("lattice evaluation needs an integer exponent")
    d = digits or params.precision_digits
    lq = params.log10_inv_q
    nu = abs(params.nu_float)
    own = math.ceil((2 * s * s + 2 * nu * abs(s) + 4 * abs(s)) * lq) if s < 0 else 0
    work = max(d, 60) + own + 10
    rung = 60 * (1 + (work - 1) // 60)
    key = (params.q_str, params.nu_str, s, rung)
    hit = _lattice_cache.get(key)
    if hit is not None:
        return hit
    with mp.workdps(rung):
        x2 = params.q ** (2 * s)
    ev = _jnu_series(x2, params, rung)
    _lattice_cache[key] = ev.value
    return ev.value

def i_nu(x, params, nu_shift=0):
    """Modified companion series: all terms positive, no cancellation.

    nu_shift evaluates the function at order nu + shift, used by identities
    that mix neighbouring orders.
    """
    with params.working(20):
        xv = _parse_number(x, "x")
        if xv < 0:
            raise DomainError("i_nu is evaluated for x >= 0")
        q = params.q
        nu = params.nu + nu_shift
        q2 = q * q
        x2 = xv * xv
        term = mp.one
        total = mp.zero
        n = 0
        below = 0
        floor = mpf(10) ** (-mp.dps - 3)
        while below < 10:
            total += term
            ratio = (q2 ** (n + 1)) * x2 / ((1 - q ** (2 * nu + 2 + 2 * n))
                                            * (1 - q2 ** (n + 1)))
            term *= ratio
            n += 1
            below = below + 1 if term < floor * total else 0
        if mp.isinf(total):
            raise Overflow("i_nu overflowed the representable range")
        return +total


def _exponent_of(x, params, what="x"):
    """Resolve a positive real to its lattice exponent; DomainError off-lattice."""
    with mp.workdps(40):
        xv = _parse_number(x, what)
        if xv <= 0:
            raise DomainError(f"{what} must be a positive lattice point")
        k_real = mp.log(xv) / mp.log(params.q)
        k = int(mp.nint(k_real))
        if abs(k_real - k) > mpf("1e-9"):
            raise DomainError(f"{what} = {x} is not a lattice point q^n")
        return k

def _lorentz_transform(k, a, params, window=None):
    """Quadrature for c (1-q) sum_l q^(l(2nu+2)) j(q^(k+l)) / (1 + q^(2l)/a^2).

    The summation range is chosen adaptively: the tail must push the weight
    q^(l(2nu+2)) below the result's own scale, and the head must cover the
    oscillatory region of j far enough that the neglected envelope is
    certified below the result as well.  A caller-supplied window only ever
    widens the range.
    """
    lq = params.log10_inv_q
    nu = params.nu_float
    with mp.workdps(40):
        av = _parse_number(a, "a")
        if av <= 0:
            raise DomainError("scale a must be positive")
        shift = int(mp.nint(mp.log(av) / mp.log(params.q)))
    m_eff = max(0, -(k + shift))
    est = ((m_eff * m_eff + (2 * nu + 1) * m_eff) + 8) * lq if m_eff > 0 else 3.0
    max_weight = (m_eff * (2 * nu + 2)) * lq if m_eff > 0 else 0.0
    digits = params.precision_digits
    dps = int(digits + est + max_weight + 30)
    l_hi = math.ceil((est + digits + 12) / ((2 * nu + 2) * lq)) + 2
    if k > 0:
        marg = math.ceil(math.sqrt((digits + est) / lq)) + 6
        l_lo = -k - marg
    else:
        l_lo = -4
    floor_log10 = -(est + digits + 10)
    def head_bound(l):
        s = k + l
        return decay_bound_log10(s, params) - l * (2 * nu + 2) * lq
    guard = 0
    while head_bound(l_lo) > floor_log10 and guard < 4000:
        l_lo -= 1
        guard += 1
    if window is not None:
        l_lo = min(l_lo, window.n_min)
        l_hi = max(l_hi, window.n_max)
    with mp.workdps(dps):
        q = params.q
        nuv = params.nu
        av = _parse_number(a, "a")
        c = constants(params.replace(precision_digits=dps)).c_q_nu
        terms = []
        for l in range(l_lo, l_hi + 1):
            t2 = q ** (2 * l)
            w = q ** (mpf(l) * (2 * nuv + 2)) / (1 + t2 / (av * av))
            terms.append(w * j_nu_lattice(k + l, params, dps))
        return +(c * (1 - q) * mpmath.fsum(terms))

def k_nu(x, params, window=None):
    """Positive kernel K_nu at a lattice point: transform of (1+t^2)^-1.

    Strictly positive on the whole lattice; decays like q^(m^2+(2nu+1)m)
    at x = q^-m, which is why the quadrature range adapts to x instead of
    using a fixed window (a fixed window mis-signs the deep tail).
    """
    k = _exponent_of(x, params)
    return _lorentz_transform(k, 1, params, window)

def g_a(x, a, params, window=None):
    """Scaled Lorentz transform g_a: the transform of (1 + t^2/a^2)^-1.

    For a = q^j on the lattice this equals a^(2(nu+1)) K_nu(a x) exactly.
    """
    k = _exponent_of(x, params)
    return _lorentz_transform(k, a, params, window)

def d_nu(params, probes=(3, 6, 9, 12, 15), with_spread=False):
    """Wronskian-type constant combining K and i at neighbouring orders.

    Evaluates x^(2(nu+1)) [ K_nu(x) i_(nu+1)(x) / (1 - q^(2nu+2))
    + K_(nu+1)(x) i_nu(x) ] at several interior lattice points; the spread
    must stay below ten times the tolerance or ConstancyViolation is raised.
    Returns the mean, or (mean, spread) when asked.
    """
    with params.working(20):
        q = params.q
        nu = params.nu
        up = params.replace(nu=mp.nstr(nu + 1, 50))
        vals = []
        for n in probes:
            x = q ** n
            kn = k_nu(x, params)
            kn1 = k_nu(x, up)
            in0 = i_nu(x, params)
            in1 = i_nu(x, params, nu_shift=1)
            v = x ** (2 * (nu + 1)) * (kn * in1 / (1 - q ** (2 * nu + 2)) + kn1 * in0)
            vals.append(v)
        mean = mpmath.fsum(vals) / len(vals)
        spread = max(vals) - min(vals)
        if spread > 10 * params.tol * max(mp.one, abs(mean)):
            raise ConstancyViolation(
                f"d_nu spread {mp.nstr(spread, 5)} exceeds 10*tol")
        mean = +mean
        spread = +spread
    if with_spread:
        return mean, spread
    return mean
