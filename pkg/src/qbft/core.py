"""Arithmetic layer for q-calculus on the geometric lattice.

Everything downstream works on the positive lattice R_q^+ = {q^n : n integer}
for a fixed base 0 < q < 1 and an order parameter nu > -1.  This module owns
the parameter/grid/sample types, q-Pochhammer symbols, the q-exponential,
Jackson integrals, the q-derivative, lattice shifts, the second-order
q-Bessel difference operator, and JSON serialization with decimal strings.

Precision discipline: mpmath arithmetic performed outside a ``workdps`` scope
silently runs at the ambient (usually 15-digit) precision, so every function
here that produces a value wraps its computation in an explicit scope sized
from the active precision or the supplied parameters.  Results are returned
rounded to the scope that produced them.
"""

import json
import math

import mpmath
from mpmath import mp, mpf, mpmathify


# ---------------------------------------------------------------------------
# errors

class QbftError(Exception):
    """Base class for all library errors."""


class InvalidParams(QbftError):
    """Parameter outside its admissible range."""


class NonConvergent(QbftError):
    """An infinite product or series failed its convergence gate."""


class DomainError(QbftError):
    """Argument outside the domain of the requested evaluation."""


class WindowError(QbftError):
    """Grid window too small or empty for the requested operation."""


class DivergentTail(QbftError):
    """Lattice sum whose head terms grow instead of decaying."""


class PrecisionExhausted(QbftError):
    """The precision ladder topped out before the certificate held."""


class Overflow(QbftError):
    """A value left the representable range."""


class ConstancyViolation(QbftError):
    """A quantity required to be constant showed spread beyond tolerance."""


class IntegrabilityError(QbftError):
    """Requested kernel is not lattice-integrable; supply more zero factors."""


class IllConditioned(QbftError):
    """Linear solve lost more than half the working digits."""


class DegenerateLeading(QbftError):
    """Polynomial leading coefficient is numerically zero."""


class PreconditionError(QbftError):
    """Input does not satisfy a stated precondition."""


class NoWitness(QbftError):
    """Diagnostic scan found no candidate satisfying the test."""


class UsageError(QbftError):
    """Command line misuse."""


# ---------------------------------------------------------------------------
# decay classes

DECAY_RAPID = "rapid"
DECAY_INTEGRABLE = "integrable"
DECAY_BOUNDED = "bounded"
DECAY_UNKNOWN = "unknown"

DECAY_CLASSES = (DECAY_RAPID, DECAY_INTEGRABLE, DECAY_BOUNDED, DECAY_UNKNOWN)


def _parse_number(x, what):
    try:
        return mpmathify(x if not isinstance(x, float) else repr(x))
    except (TypeError, ValueError):
        raise InvalidParams(f"{what}: cannot parse {x!r} as a real number")


class QParams:
    """Base q, order nu, target precision in digits, and tolerance.

    q and nu are stored as decimal strings and re-materialized at the active
    working precision on each access, so a parameter like q = 0.9 keeps full
    accuracy no matter how many digits a caller later works with.
    """

    def __init__(self, q="0.5", nu="0.5", precision_digits=60, tol="1e-40"):
        self.q_str = str(q) if not isinstance(q, float) else repr(q)
        self.nu_str = str(nu) if not isinstance(nu, float) else repr(nu)
        self.tol_str = str(tol) if not isinstance(tol, float) else repr(tol)
        if not isinstance(precision_digits, int) or precision_digits < 30:
            raise InvalidParams("precision_digits must be an integer >= 30")
        self.precision_digits = precision_digits
        with mp.workdps(50):
            qv = _parse_number(self.q_str, "q")
            nuv = _parse_number(self.nu_str, "nu")
            tv = _parse_number(self.tol_str, "tol")
            if not (0 < qv < 1):
                raise InvalidParams(f"q must satisfy 0 < q < 1, got {self.q_str}")
            if not (nuv > -1):
                raise InvalidParams(f"nu must satisfy nu > -1, got {self.nu_str}")
            if not (tv > 0):
                raise InvalidParams(f"tol must be positive, got {self.tol_str}")

    @property
    def q(self):
        return mpmathify(self.q_str)

    @property
    def nu(self):
        return mpmathify(self.nu_str)

    @property
    def tol(self):
        return mpmathify(self.tol_str)

    @property
    def nu_float(self):
        return float(self.nu_str)

    @property
    def log10_inv_q(self):
        """log10(1/q) as a float, the digits-per-lattice-step scale."""
        return -math.log10(float(self.q_str))

    def working(self, extra=0):
        """Context manager setting the working precision to digits + extra."""
        return mp.workdps(self.precision_digits + extra)

    def replace(self, **kw):
        args = dict(q=self.q_str, nu=self.nu_str,
                    precision_digits=self.precision_digits, tol=self.tol_str)
        args.update(kw)
        return QParams(**args)

    def __repr__(self):
        return (f"QParams(q={self.q_str}, nu={self.nu_str}, "
                f"precision_digits={self.precision_digits}, tol={self.tol_str})")

    def __eq__(self, other):
        return (isinstance(other, QParams)
                and self.q_str == other.q_str and self.nu_str == other.nu_str
                and self.precision_digits == other.precision_digits
                and self.tol_str == other.tol_str)

    def __hash__(self):
        return hash((self.q_str, self.nu_str, self.precision_digits, self.tol_str))


class QGrid:
    """Contiguous window of lattice exponents n_min..n_max (x = q^n).

    Larger exponents mean smaller points; n_min is the large-x edge.
    """

    def __init__(self, n_min=-24, n_max=64):
        if not (isinstance(n_min, int) and isinstance(n_max, int)):
            raise InvalidParams("grid bounds must be integers")
        if n_min > n_max:
            raise WindowError(f"empty grid window [{n_min}, {n_max}]")
        self.n_min = n_min
        self.n_max = n_max

    def exponents(self):
        return range(self.n_min, self.n_max + 1)

    def __len__(self):
        return self.n_max - self.n_min + 1

    def __contains__(self, n):
        return self.n_min <= n <= self.n_max

    def index(self, n):
        if n not in self:
            raise WindowError(f"exponent {n} outside window [{self.n_min}, {self.n_max}]")
        return n - self.n_min

    def __eq__(self, other):
        return (isinstance(other, QGrid)
                and self.n_min == other.n_min and self.n_max == other.n_max)

    def __hash__(self):
        return hash((self.n_min, self.n_max))

    def __repr__(self):
        return f"QGrid({self.n_min}, {self.n_max})"


class GridFunction:
    """Samples of a function on a QGrid, with a declared decay class.

    values[i] is the sample at x = q^(n_min + i).  decay_class declares the
    behaviour as x -> infinity (the n -> -infinity side) and gates which
    integrals and transforms accept the function.
    """

    def __init__(self, grid, values, decay_class=DECAY_UNKNOWN):
        if decay_class not in DECAY_CLASSES:
            raise InvalidParams(f"unknown decay class {decay_class!r}")
        values = list(values)
        if len(values) != len(grid):
            raise InvalidParams(
                f"value count {len(values)} does not match window size {len(grid)}")
        self.grid = grid
        self.values = values
        self.decay_class = decay_class

    def value_at(self, n):
        """Sample at exponent n, i.e. at the point x = q^n."""
        return self.values[self.grid.index(n)]

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_callable(cls, grid, fn, decay_class=DECAY_UNKNOWN):
        """Build by evaluating fn(n) at every exponent of the grid."""
        return cls(grid, [fn(n) for n in grid.exponents()], decay_class)

    @classmethod
    def zero(cls, grid, decay_class=DECAY_RAPID):
        return cls(grid, [mp.zero] * len(grid), decay_class)

    def __repr__(self):
        return (f"GridFunction(window=[{self.grid.n_min}, {self.grid.n_max}], "
                f"decay={self.decay_class})")


class Constants:
    """Normalization constants attached to a parameter set.

    c_q_nu   weights the transform and convolution integrals,
    B_q_nu   bounds the transform operator norm on L^1,
    sigma_nu scales the limit polynomials of the kernel calculus.
    """

    def __init__(self, c_q_nu, B_q_nu, sigma_nu):
        self.c_q_nu = c_q_nu
        self.B_q_nu = B_q_nu
        self.sigma_nu = sigma_nu


def constants(params, extra=10):
    """Compute the Constants bundle at digits + extra working precision."""
    with params.working(extra + 10):
        q = params.q
        nu = params.nu
        q2 = q * q
        a = qpochhammer_infinite(q ** (2 * nu + 2), q2)
        b = qpochhammer_infinite(q2, q2)
        an = qpochhammer_infinite(-q ** (2 * nu + 2), q2)
        bn = qpochhammer_infinite(-q2, q2)
        c = a / b / (1 - q)
        B = bn * an / b / (1 - q)
        sig = a * b
        return Constants(+c, +B, +sig)


# ---------------------------------------------------------------------------
# q-Pochhammer and the q-exponential

def qpochhammer_finite(a, q, n):
    """(a; q)_n = prod_{i=0..n-1} (1 - a q^i), evaluated at working precision."""
    if not isinstance(n, int) or n < 0:
        raise InvalidParams("pochhammer length n must be a nonnegative integer")
    with mp.workdps(mp.dps + 10):
        a = _parse_number(a, "a")
        q = _parse_number(q, "q")
        prod = mp.one
        ap = a
        for _ in range(n):
            prod *= (1 - ap)
            ap *= q
        return +prod

def qpochhammer_infinite(a, q, tol=None):
    """(a; q)_inf for |q| < 1.

    Multiplies factors until the running term a q^i drops below the truncation
    threshold, then applies one log-tail correction exp(-term / (1 - q)) for
    the remaining factors.  Declared stable when one further factor moves the
    corrected value by less than the tolerance; otherwise NonConvergent.
    """
    with mp.workdps(mp.dps + 10):
        a = _parse_number(a, "a")
        q = _parse_number(q, "q")
        if abs(q) >= 1:
            raise NonConvergent("infinite pochhammer needs |q| < 1")
        eff_tol = mpmathify(tol) if tol is not None else mpf(10) ** (-(mp.dps - 8))
        thresh = eff_tol * mpf("1e-2")
        prod = mp.one
        term = a
        steps = 0
        while abs(term) > thresh:
            prod *= (1 - term)
            term *= q
            steps += 1
            if steps > 4_000_000:
                raise NonConvergent("pochhammer truncation did not reach threshold")
        first = prod * mp.e ** (-term / (1 - q))
        prod *= (1 - term)
        term *= q
        second = prod * mp.e ** (-term / (1 - q))
        if abs(first - second) > eff_tol * max(mp.one, abs(first)):
            raise NonConvergent("pochhammer tail correction did not stabilize")
        return +second

def q_exponential(z, q):
    """e(z, q) = sum_n z^n / (q; q)_n, the q-exponential, for |z| < 1.

    Equals 1 / (z; q)_inf on its disk of convergence.
    """
    with mp.workdps(mp.dps + 10):
        z = _parse_number(z, "z")
        q = _parse_number(q, "q")
        if abs(q) >= 1:
            raise NonConvergent("q-exponential needs |q| < 1")
        if abs(z) >= 1:
            raise DomainError("q-exponential series needs |z| < 1")
        total = mp.zero
        term = mp.one
        n = 0
        floor = mpf(10) ** (-(mp.dps - 8))
        below = 0
        while below < 10:
            total += term
            n += 1
            term *= z / (1 - q ** n)
            below = below + 1 if abs(term) < floor * max(mp.one, abs(total)) else 0
            if n > 4_000_000:
                raise NonConvergent("q-exponential series did not settle")
        return +total


# ---------------------------------------------------------------------------
# Jackson integrals

def jackson_integral_finite(f, a, params, with_tail=False):
    """Jackson integral of f from 0 to a: (1-q) a sum_{n>=0} q^n f(a q^n).

    a must be a lattice point q^m with the ray {m, m+1, ...} meeting f's
    window in at least 8 points.  The neglected tail below the window is
    estimated geometrically from the last kept summand.
    """
    with params.working(10):
        q = params.q
        av = _parse_number(a, "a")
        if av <= 0:
            raise DomainError("upper limit must be positive")
        m_real = mp.log(av) / mp.log(q)
        m = int(mp.nint(m_real))
        if abs(m_real - m) > mpf("1e-9"):
            raise DomainError(f"upper limit {a} is not a lattice point q^m")
        if m < f.grid.n_min:
            raise WindowError(
                f"upper limit exponent {m} lies above the window; "
                f"the leading summands are not available")
        lo = m
        count = f.grid.n_max - lo + 1
        if count < 8:
            raise WindowError(
                f"only {count} summands available above exponent {m}; need >= 8")
        terms = [q ** (n - m) * f.value_at(n) for n in range(lo, f.grid.n_max + 1)]
        value = (1 - q) * av * mpmath.fsum(terms)
        tail = abs((1 - q) * av * terms[-1]) * q / (1 - q)
        value = +value
        tail = +tail
    if with_tail:
        return value, tail
    return value

def jackson_integral_infinite(f, params, with_tail=False):
    """Jackson integral of f over (0, inf): (1-q) sum_n q^n f(q^n).

    Requires decay class rapid or integrable.  Raises DivergentTail when the
    head summands (large-x side) grow outward instead of decaying.  The
    two-sided tail estimate covers both truncated ends of the window.
    """
    if f.decay_class not in (DECAY_RAPID, DECAY_INTEGRABLE):
        raise PreconditionError(
            f"integral over (0, inf) needs rapid or integrable decay, "
            f"got {f.decay_class!r}")
    with params.working(10):
        q = params.q
        summands = [q ** n * f.value_at(n) for n in f.grid.exponents()]
        head = [abs(s) for s in summands[:6]]
        if len(head) >= 3 and all(head[i] > head[i + 1] * (1 + mpf("1e-10"))
                                  for i in range(len(head) - 1)) and head[0] > 0:
            raise DivergentTail("head summands grow toward large x")
        value = (1 - q) * mpmath.fsum(summands)
        head_tail = (1 - q) * (head[0] if head else mp.zero)
        low_tail = (1 - q) * abs(summands[-1]) * q / (1 - q) if summands else mp.zero
        value = +value
        tail = +(head_tail + low_tail)
    if with_tail:
        return value, tail
    return value


# ---------------------------------------------------------------------------
# difference operators and shifts

def q_derivative(f, params):
    """D_q f(x) = (f(x) - f(qx)) / ((1-q) x) on the lattice.

    Needs the neighbour sample f(q^(n+1)), so the output window loses its
    n_max exponent.
    """
    if len(f.grid) < 2:
        raise WindowError("q-derivative needs at least two grid points")
    with params.working(10):
        q = params.q
        out = []
        for n in range(f.grid.n_min, f.grid.n_max):
            out.append(+((f.value_at(n) - f.value_at(n + 1)) / ((1 - q) * q ** n)))
    return GridFunction(QGrid(f.grid.n_min, f.grid.n_max - 1), out, DECAY_UNKNOWN)

def lambda_shift(f, k):
    """Scale shift (Lambda^k f)(x) = f(q^k x), exact on the lattice.

    The output lives on the shifted window: its sample at exponent n is the
    input sample at exponent n + k.  Shifting by k then -k is the identity.
    """
    if not isinstance(k, int):
        raise InvalidParams("shift order k must be an integer")
    if len(f.grid) == 0:
        raise WindowError("cannot shift an empty grid")
    return GridFunction(QGrid(f.grid.n_min - k, f.grid.n_max - k),
                        list(f.values), f.decay_class)

def q_bessel_operator(f, params):
    """Second-order q-Bessel difference operator.

    (Delta f)(x) = x^-2 [ f(x/q) - (1 + q^(2 nu)) f(x) + q^(2 nu) f(qx) ].
    Both window edges are lost (three-point stencil).  Acts as multiplication
    by -a^2 on the eigenfunctions j_nu(a x) of the calculus.
    """
    if len(f.grid) < 3:
        raise WindowError("q-Bessel operator needs at least three grid points")
    with params.working(10):
        q = params.q
        nu = params.nu
        co = 1 + q ** (2 * nu)
        out = []
        for n in range(f.grid.n_min + 1, f.grid.n_max):
            val = (f.value_at(n - 1) - co * f.value_at(n)
                   + q ** (2 * nu) * f.value_at(n + 1))
            out.append(+(q ** (-2 * n) * val))
    return GridFunction(QGrid(f.grid.n_min + 1, f.grid.n_max - 1), out, DECAY_UNKNOWN)


# ---------------------------------------------------------------------------
# serialization

def decimal_str(x, digits):
    """Deterministic decimal string with the given number of significant digits."""
    with mp.workdps(digits + 5):
        return mp.nstr(mpmathify(x), digits, strip_zeros=True)

def gridfunction_to_json(f, params, digits=None):
    """Serialize a grid function with its parameters as decimal strings."""
    d = digits or params.precision_digits + 10
    payload = {
        "q": params.q_str,
        "nu": params.nu_str,
        "n_min": f.grid.n_min,
        "n_max": f.grid.n_max,
        "decay_class": f.decay_class,
        "values": [decimal_str(v, d) for v in f.values],
    }
    return json.dumps(payload, indent=1)

def gridfunction_from_json(text, precision_digits=60, tol="1e-40"):
    """Parse a serialized grid function; returns (GridFunction, QParams)."""
    try:
        payload = json.loads(text)
        q = payload["q"]
        nu = payload["nu"]
        n_min = int(payload["n_min"])
        n_max = int(payload["n_max"])
        raw = payload["values"]
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidParams(f"malformed grid function payload: {exc}")
    params = QParams(q=q, nu=nu, precision_digits=precision_digits, tol=tol)
    decay = payload.get("decay_class", DECAY_UNKNOWN)
    with params.working(10):
        values = [mpmathify(s) for s in raw]
    return GridFunction(QGrid(n_min, n_max), values, decay), params
