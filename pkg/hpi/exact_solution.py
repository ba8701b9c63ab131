"""
    Closed-form interface theory of the anisotropic two-dimensional Ising model.

    Everything here is a pure function of value inputs. Couplings are dimensionless, ``k = beta * J``, so the
    temperature never appears explicitly. The dispersion relation

        ``cosh gamma(w) = cosh 2k1* cosh 2k2 - sinh 2k1* sinh 2k2 cos w``

    is the single source from which the saddle point, surface tension, stiffness and the limiting magnetization
    profile are derived. Along the imaginary axis ``w = i nu`` only real arithmetic is needed.
"""

import logging
import math
import typing

import numpy as np
from scipy import integrate, optimize

from . import _types
from .errors import ConsistencyError, DomainError, NumericalError


log = logging.getLogger("hpi")

CRITICAL_ISOTROPIC = 0.5 * math.log(1.0 + math.sqrt(2.0))
STIFFNESS_MARGIN = 0.05
Z_FORMS = ("stiffness", "saddle", "gaussian")

_CURVATURE_STEP = 1e-5
_CURVATURE_RTOL = 1e-4
_STENCIL_STEP = 1e-3
_STIFFNESS_RTOL = 1e-6
_ROUNDOFF_FACTOR = 10.0
_EPS = float(np.finfo(np.float64).eps)


def dual_coupling(k: float) -> float:
    """
        Kramers-Wannier dual, ``exp(2k*) = coth k``. An involution on ``(0, inf)`` with fixed point
        :data:`CRITICAL_ISOTROPIC`.

    :param k: Positive coupling
    :return: The dual coupling
    """
    if not k > 0:
        raise DomainError(f"Coupling must be positive, got {k}", parameter="k")
    if k < 1.0:
        return -0.5 * math.log(math.tanh(k))
    return math.atanh(math.exp(-2.0 * k))


class Couplings(typing.NamedTuple):
    """
        Dimensionless horizontal (``k1``) and vertical (``k2``) couplings
    """

    k1: float
    k2: float

    @classmethod
    def create(cls, k1: float, k2: typing.Optional[float] = None) -> 'Couplings':
        """
            Validated constructor. A single argument gives isotropic couplings.

        :param k1: Horizontal coupling
        :param k2: Vertical coupling, defaults to ``k1``
        :return: New couplings
        """
        k2 = k1 if k2 is None else k2
        for name, value in (("k1", k1), ("k2", k2)):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"Coupling {name} must be a positive finite number, got {value}", parameter=name)
        return cls(float(k1), float(k2))

    @property
    def dual1(self) -> float:
        return dual_coupling(self.k1)

    @property
    def dual2(self) -> float:
        return dual_coupling(self.k2)

    @property
    def is_subcritical(self) -> bool:
        return self.dual1 < self.k2


class SaddleSolution(typing.NamedTuple):
    theta: float
    nu: float
    gamma_at_saddle: float
    gamma2_at_saddle: float


class TensionCurve(typing.NamedTuple):
    """
        Tension and stiffness on a grid of angles. All fields are arrays of equal length.
    """

    theta: _types.FloatArray
    nu: _types.FloatArray
    tau: _types.FloatArray
    stiffness: _types.FloatArray
    z_unit: _types.FloatArray


class ProfilePoint(typing.NamedTuple):
    alpha: float
    z: float
    magnetization: float


def _spread(c: Couplings) -> typing.Tuple[float, float]:
    # (2k2 - 2k1*, sinh 2k1* sinh 2k2)
    a = 2.0 * c.dual1
    b = 2.0 * c.k2
    return b - a, math.sinh(a) * math.sinh(b)


def _excess_real(omega: float, c: Couplings) -> float:
    d, big_b = _spread(c)
    return 2.0 * math.sinh(0.5 * d) ** 2 + 2.0 * big_b * math.sin(0.5 * omega) ** 2


def _excess_imag(nu: float, c: Couplings) -> float:
    d, big_b = _spread(c)
    return 2.0 * math.sinh(0.5 * d) ** 2 - 2.0 * big_b * math.sinh(0.5 * nu) ** 2


def _arccosh1p(x: float) -> float:
    # arccosh(1 + x) without cancellation near x = 0
    return math.log1p(x + math.sqrt(x * (x + 2.0)))


def gamma(omega: float, c: Couplings) -> float:
    """
        Dispersion on the real axis. Even, ``2 pi`` periodic and non-negative.

    :param omega: Real frequency
    :param c: Couplings
    :return: ``gamma(omega)``
    """
    return _arccosh1p(_excess_real(omega, c))


def nu_max(c: Couplings) -> float:
    """
        Right end of the imaginary-axis domain, the root of ``cosh gamma(i nu) = 1``. Found by bisection; the
        result equals ``2|k1 - k2*|``.

    :param c: Couplings
    :return: ``nu_max`` (0 at criticality)
    """
    if _excess_imag(0.0, c) <= 0.0:
        return 0.0
    upper = 1.0
    while _excess_imag(upper, c) > 0.0:
        upper *= 2.0
    return float(optimize.bisect(_excess_imag, 0.0, upper, args=(c,), xtol=1e-15))


def gamma_imag(nu: float, c: Couplings) -> float:
    """
        Dispersion continued to ``omega = i nu``. Strictly decreasing in ``|nu|``, vanishing at ``nu_max``.

    :param nu: Imaginary part of the frequency
    :param c: Couplings
    :return: ``gamma(i nu)``
    """
    x = _excess_imag(nu, c)
    if x < 0.0:
        # bisection roots land a few ulps past the branch point
        if x > -1e-12:
            return 0.0
        bound = nu_max(c)
        raise DomainError(f"nu={nu} lies beyond the branch point nu_max={bound}", parameter="nu", bound=bound)
    return _arccosh1p(x)


def _sinh_gamma_imag(nu: float, c: Couplings) -> float:
    x = max(_excess_imag(nu, c), 0.0)
    return math.sqrt(x * (x + 2.0))


def gamma2_imag(nu: float, c: Couplings, check: bool = True) -> float:
    """
        Second frequency derivative of the dispersion at ``omega = i nu``. Differentiating the dispersion twice:

            ``gamma'' = B cosh(nu) / sinh(gamma) + cosh(gamma) B^2 sinh(nu)^2 / sinh(gamma)^3``

        with ``B = sinh 2k1* sinh 2k2``. A central difference along the imaginary axis guards the closed form
        when ``check`` is set and the stencil stays clear of the branch point.

    :param nu: Imaginary part of the frequency, ``|nu| < nu_max``
    :param c: Couplings
    :param check: Cross-check against a central difference
    :return: ``gamma''(i nu) > 0``
    """
    _, big_b = _spread(c)
    x = _excess_imag(nu, c)
    if x <= 0.0:
        raise DomainError(f"Curvature diverges at the branch point, nu={nu}", parameter="nu", bound=nu_max(c))
    sinh_g = math.sqrt(x * (x + 2.0))
    value = big_b * math.cosh(nu) / sinh_g + (1.0 + x) * big_b ** 2 * math.sinh(nu) ** 2 / sinh_g ** 3

    if check and abs(nu) + 0.01 < nu_max(c):
        h = _CURVATURE_STEP
        # d^2/dnu^2 gamma(i nu) = -gamma''(i nu)
        centre = gamma_imag(nu, c)
        numeric = -(gamma_imag(nu + h, c) - 2.0 * centre + gamma_imag(nu - h, c)) / h ** 2
        # the stencil loses about eps * gamma / h^2 to round-off
        slack = _CURVATURE_RTOL * abs(value) + _ROUNDOFF_FACTOR * _EPS * abs(centre) / h ** 2
        log.debug(f"gamma2 at nu={nu}: closed form {value}, central difference {numeric}, slack {slack}")
        if abs(numeric - value) > slack:
            raise ConsistencyError("Closed-form curvature disagrees with central difference",
                                   {"nu": nu, "closed_form": value, "numeric": numeric})
    return value


def _check_theta(theta: float, limit: float = 0.5 * math.pi) -> None:
    if not (math.isfinite(theta) and abs(theta) < limit):
        raise DomainError(f"theta={theta} must satisfy |theta| < {limit}", parameter="theta", bound=limit)


def _check_subcritical(c: Couplings) -> None:
    if not c.is_subcritical:
        raise DomainError(f"Couplings {tuple(c)} are not subcritical (k1*={c.dual1} >= k2)", parameter="c")


def solve_saddle(theta: float, c: Couplings) -> SaddleSolution:
    """
        Solve the saddle equation ``B sinh(nu) / sinh(gamma(i nu)) = tan(theta)`` on ``[0, nu_max)``.

        The left side rises from 0 to infinity across the interval so the root is unique. Negative angles use
        the odd symmetry of the equation.

    :param theta: Interface angle, ``|theta| < pi/2``
    :param c: Subcritical couplings
    :return: Saddle point bundle
    """
    _check_theta(theta)
    _check_subcritical(c)
    if theta == 0.0:
        g0 = gamma_imag(0.0, c)
        return SaddleSolution(0.0, 0.0, g0, gamma2_imag(0.0, c))

    _, big_b = _spread(c)
    slope = math.tan(abs(theta))
    upper = nu_max(c)

    def equation(nu: float) -> float:
        return big_b * math.sinh(nu) - slope * _sinh_gamma_imag(nu, c)

    lo, hi = equation(0.0), equation(upper)
    if not (lo < 0.0 < hi):
        raise NumericalError(f"Saddle equation not bracketed at theta={theta}",
                             {"theta": theta, "nu_max": upper, "f_lo": lo, "f_hi": hi})
    try:
        root, info = optimize.brentq(equation, 0.0, upper, xtol=1e-15, full_output=True)
    except (ValueError, RuntimeError) as e:
        raise NumericalError(f"Saddle root finding failed at theta={theta}: {e}",
                             {"theta": theta, "nu_max": upper}) from e
    log.debug(f"saddle theta={theta}: nu={root} after {info.iterations} iterations, bracket [0, {upper}]")
    if not root < upper:
        raise NumericalError(f"Saddle at theta={theta} collapsed onto the branch point",
                             {"theta": theta, "nu": root, "nu_max": upper})

    nu = math.copysign(root, theta)
    return SaddleSolution(theta, nu, gamma_imag(nu, c), gamma2_imag(nu, c))


def _tension_at(sol: SaddleSolution) -> float:
    return math.cos(sol.theta) * sol.gamma_at_saddle + math.sin(sol.theta) * sol.nu


def surface_tension(theta: float, c: Couplings) -> float:
    """
        Surface tension ``tau(theta) = cos(theta) gamma(i nu) + sin(theta) nu`` at the saddle

    :param theta: Interface angle
    :param c: Subcritical couplings
    :return: Tension per unit length
    """
    return _tension_at(solve_saddle(theta, c))


def _stiffness_identity(sol: SaddleSolution) -> float:
    return 1.0 / (math.cos(sol.theta) ** 3 * sol.gamma2_at_saddle)


def _five_point(theta: float, c: Couplings, centre: float, h: float) -> float:
    tau = [surface_tension(theta + j * h, c) for j in (-2, -1, 1, 2)]
    return (-tau[0] + 16.0 * tau[1] - 30.0 * centre + 16.0 * tau[2] - tau[3]) / (12.0 * h * h)


def stiffness(theta: float, c: Couplings, margin: float = STIFFNESS_MARGIN) -> float:
    """
        Surface stiffness ``tau + tau''``. Evaluated through ``sec(theta)^3 / gamma''(i nu)`` and checked
        against a five-point stencil of :func:`surface_tension`.

    :param theta: Interface angle, ``|theta| < pi/2 - margin``
    :param c: Subcritical couplings
    :param margin: Distance kept from ``pi/2``
    :return: Stiffness
    """
    _check_theta(theta, 0.5 * math.pi - margin)
    sol = solve_saddle(theta, c)
    value = _stiffness_identity(sol)

    h = 0.5 * _STENCIL_STEP
    centre = _tension_at(sol)
    coarse = _five_point(theta, c, centre, 2.0 * h)
    fine = _five_point(theta, c, centre, h)
    numeric = centre + fine
    # the coarse-fine gap bounds the truncation error of the fine stencil
    slack = (_STIFFNESS_RTOL * abs(value) + abs(fine - coarse)
             + _ROUNDOFF_FACTOR * _EPS * 64.0 / 12.0 * abs(centre) / h ** 2)
    if abs(numeric - value) > slack:
        raise ConsistencyError(f"Stiffness routes disagree at theta={theta}",
                               {"theta": theta, "identity": value, "stencil": numeric, "slack": slack})
    return value


def z_scaling(alpha: float, theta: float, c: Couplings, form: str = "stiffness") -> float:
    """
        Scaled normal coordinate of the limiting profile. Linear and odd in ``alpha``.

        ``"stiffness"`` is ``alpha [sec(theta) (tau + tau'')]^(1/2)``, ``"saddle"`` is
        ``alpha sec(theta)^(3/2) / (2 gamma'')`` and ``"gaussian"`` is ``alpha sec(theta)^(3/2) / (2 gamma'')^(1/2)``.
        Every call logs all three at debug level.

    :param alpha: Normal displacement in units of ``sqrt(L)``
    :param theta: Interface angle
    :param c: Subcritical couplings
    :param form: Which scale to return
    :return: ``z``
    """
    if form not in Z_FORMS:
        raise DomainError(f"Unknown z form {form!r}, expected one of {Z_FORMS}", parameter="form")
    sol = solve_saddle(theta, c)
    sec = 1.0 / math.cos(theta)
    forms = {
        "stiffness": alpha * math.sqrt(sec * _stiffness_identity(sol)),
        "saddle": alpha * sec ** 1.5 / (2.0 * sol.gamma2_at_saddle),
        "gaussian": alpha * sec ** 1.5 / math.sqrt(2.0 * sol.gamma2_at_saddle),
    }
    if alpha != 0.0:
        log.debug(f"z forms at alpha={alpha}, theta={theta}: {forms}, "
                  f"saddle/stiffness={forms['saddle'] / forms['stiffness']}")
    return forms[form]


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _gauss(u: float) -> float:
    return math.exp(-u * u)


def profile_F(z: float) -> float:
    """
        ``F(z) = (2/sqrt(pi)) int_z^inf exp(-u^2) du`` for ``z > 0``, extended as an odd function

    :param z: Real argument
    :return: ``F(z)``
    """
    if z == 0.0:
        return 0.0
    value, _ = integrate.quad(_gauss, abs(z), np.inf, epsabs=1e-14, epsrel=1e-13)
    return math.copysign(_TWO_OVER_SQRT_PI * value, z)


def profile_G(z: float) -> float:
    """
        ``G(z) = (2/sqrt(pi)) int_0^z exp(-u^2) du``

    :param z: Non-negative argument
    :return: ``G(z)`` in ``[0, 1)``
    """
    if z < 0.0:
        raise DomainError(f"G is defined for z >= 0, got {z}", parameter="z")
    if z == 0.0:
        return 0.0
    value, _ = integrate.quad(_gauss, 0.0, z, epsabs=1e-14, epsrel=1e-13)
    return _TWO_OVER_SQRT_PI * value


def spontaneous_magnetization(c: Couplings) -> float:
    """
        Bulk order parameter ``m* = (1 - (sinh 2k1 sinh 2k2)^-2)^(1/8)``, 0 at and above criticality

    :param c: Couplings
    :return: ``m*``
    """
    product = math.sinh(2.0 * c.k1) * math.sinh(2.0 * c.k2)
    if product <= 1.0:
        return 0.0
    return (1.0 - product ** -2) ** 0.125


def limiting_profile(alpha: float, theta: float, c: Couplings, orientation: int = -1,
                     form: str = "stiffness") -> float:
    """
        Limiting magnetization at normal displacement ``y = alpha sqrt(L)`` from the interface,
        ``orientation * m* * sgn(z) * G(|z|)``.

        ``orientation = -1`` is the profile with minus above the interface; ``+1`` matches a strip whose
        left boundary is plus for ``t > 0``.

    :param alpha: Normal displacement in units of ``sqrt(L)``
    :param theta: Interface angle
    :param c: Subcritical couplings
    :param orientation: Sign of the magnetization far above the interface
    :param form: Scale passed to :func:`z_scaling`
    :return: Magnetization in ``[-m*, m*]``
    """
    if orientation not in (-1, 1):
        raise DomainError(f"orientation must be -1 or +1, got {orientation}", parameter="orientation")
    z = z_scaling(alpha, theta, c, form)
    if z == 0.0:
        return 0.0
    return orientation * spontaneous_magnetization(c) * math.copysign(profile_G(abs(z)), z)


def profile_points(alphas: typing.Iterable[float], theta: float, c: Couplings, orientation: int = -1,
                   form: str = "stiffness") -> typing.List[ProfilePoint]:
    m_star = spontaneous_magnetization(c)
    points = []
    for alpha in alphas:
        z = z_scaling(alpha, theta, c, form)
        m = 0.0 if z == 0.0 else orientation * m_star * math.copysign(profile_G(abs(z)), z)
        points.append(ProfilePoint(float(alpha), z, m))
    return points


def log_partition_asymptotic(N: int, theta: float, c: Couplings) -> float:
    """
        Leading asymptotics of the interface partition function, ``-tau N / cos(theta) - (1/2) ln(N / cos(theta))``.
        The additive constant is dropped; use differences or slopes.

    :param N: Horizontal extent
    :param theta: Interface angle
    :param c: Subcritical couplings
    :return: ``ln Z`` up to a constant
    """
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}", parameter="N")
    length = N / math.cos(theta)
    return -surface_tension(theta, c) * length - 0.5 * math.log(length)


def log_partition_gaussian(N: int, theta: float, c: Couplings) -> float:
    """
        Finite-size form from the Gaussian integral around the saddle, boundary factor set to one:
        ``-L tau - (1/2) ln(2 pi L cos(theta) gamma'')`` with ``L = N / cos(theta)``.
    """
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}", parameter="N")
    sol = solve_saddle(theta, c)
    length = N / math.cos(theta)
    return -length * _tension_at(sol) - 0.5 * math.log(2.0 * math.pi * N * sol.gamma2_at_saddle)


def tension_curve(thetas: typing.Iterable[float], c: Couplings, margin: float = STIFFNESS_MARGIN) -> TensionCurve:
    """
        Evaluate saddle, tension, stiffness and the unit z scale over a grid. Angles with
        ``|theta| >= pi/2 - margin`` are dropped with a warning.

    :param thetas: Angle grid
    :param c: Subcritical couplings
    :param margin: Clip distance from ``pi/2``
    :return: Curve over the kept angles
    """
    _check_subcritical(c)
    limit = 0.5 * math.pi - margin
    rows = []
    for theta in thetas:
        theta = float(theta)
        if abs(theta) >= limit:
            log.warning(f"theta={theta} clipped, |theta| must stay below pi/2 - {margin}")
            continue
        sol = solve_saddle(theta, c)
        rows.append((theta, sol.nu, _tension_at(sol), stiffness(theta, c, margin), z_scaling(1.0, theta, c)))
    columns = np.array(rows, dtype=np.float64).reshape(-1, 5).T
    return TensionCurve(*columns)
