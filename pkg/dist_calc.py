"""
Calculo simbolico exacto de distribuciones soportadas en [0, L].

Una expresion (DistExpr) es una suma de una parte suave "ventaneada"
f(x) theta(x) theta(L-x) y de deltas en las paredes c * delta(x), c * delta(L-x).
Las funciones suaves son polinomios trigonometricos con numeros de onda
multiplos enteros de pi/L, de modo que sin(k_n L) = 0 y cos(k_n L) = (-1)^n se
aplican como identidades exactas. Los coeficientes son expresiones de sympy.

Convenciones:
- Las deltas se criban siempre en el momento de crearlas: f(x) delta(x) -> f(0) delta(x).
- No existen delta' ni deltas interiores; derivar una delta con coeficiente no nulo es un error.
- La integral sobre [0, L] asigna peso 1/2 a cada delta de pared.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import sympy as sp

from spectral_dynamics import check_quantum_number

logger = logging.getLogger(__name__)


class DistCalcError(ValueError):
    pass


class DeltaDerivativeUnsupported(DistCalcError):
    pass


class NonRemovableSingularity(DistCalcError):
    pass


class UnsiftedDelta(DistCalcError):
    pass


class UnsupportedIntegrand(DistCalcError):
    pass


class Trig(Enum):
    SIN = "sin"
    COS = "cos"


class Site(Enum):
    LEFT = "0"
    RIGHT = "L"


class Prefactor(Enum):
    INV_X = "1/x"
    INV_L_MINUS_X = "1/(L-x)"

    @property
    def singular_site(self):
        return Site.LEFT if self is Prefactor.INV_X else Site.RIGHT


def exact(value):
    """Convierte un numero de Python a sympy sin pasar por flotantes inexactos cuando se puede."""
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, (int, np.integer)):
        return sp.Integer(int(value))
    return sp.nsimplify(float(value), rational=True)


def same_length(a, b):
    return a == b or sp.simplify(a - b) == 0


@lru_cache(maxsize=None)
def exact_parameters(cfg):
    """(L, m, hbar) de la configuracion como racionales de sympy."""
    return exact(cfg.L), exact(cfg.m), exact(cfg.hbar)


def _parity(q):
    return sp.Integer(1) if q % 2 == 0 else sp.Integer(-1)


@dataclass(frozen=True)
class TrigTerm:
    """coeff * sin|cos(multiple * pi * x / L + phase * pi)"""
    kind: Trig
    coeff: sp.Expr
    multiple: int
    phase: int = 0

    def angle_multiple_at(self, site):
        # Angulo en la pared medido en multiplos de pi
        return self.phase if site is Site.LEFT else self.multiple + self.phase

    def value_at(self, site):
        q = self.angle_multiple_at(site)
        if self.kind is Trig.SIN:
            return sp.Integer(0)
        return self.coeff * _parity(q)


@dataclass(frozen=True)
class SmoothFn:
    """
    Suma finita de terminos c sin(k x + phi), c cos(k x + phi) sobre un pozo de anchura `length`,
    con un prefactor racional opcional 1/x o 1/(L-x).
    """
    terms: tuple
    length: sp.Expr
    prefactor: Prefactor = None

    # Constructores
    @classmethod
    def zero(cls, length):
        return cls((), exact(length))

    @classmethod
    def constant(cls, value, length):
        return cls((TrigTerm(Trig.COS, exact(value), 0, 0),), exact(length)).simplified()

    @classmethod
    def sine(cls, coeff, multiple, length, phase=0):
        return cls((TrigTerm(Trig.SIN, exact(coeff), int(multiple), int(phase)),), exact(length))

    @classmethod
    def cosine(cls, coeff, multiple, length, phase=0):
        return cls((TrigTerm(Trig.COS, exact(coeff), int(multiple), int(phase)),), exact(length))

    def wavenumber(self, multiple):
        return multiple * sp.pi / self.length

    def simplified(self):
        """
        Forma canonica: fases absorbidas en el signo, numeros de onda no negativos,
        terminos iguales agrupados y coeficientes nulos eliminados.
        """
        merged = {}
        for term in self.terms:
            coeff = term.coeff * _parity(term.phase)
            multiple = term.multiple
            if multiple < 0:
                multiple = -multiple
                if term.kind is Trig.SIN:
                    coeff = -coeff
            if multiple == 0 and term.kind is Trig.SIN:
                continue
            key = (term.kind, multiple)
            merged[key] = merged.get(key, sp.Integer(0)) + coeff

        terms = []
        for (kind, multiple), coeff in sorted(merged.items(), key=lambda item: (item[0][0].value, item[0][1])):
            coeff = sp.expand(coeff)
            if coeff != 0:
                terms.append(TrigTerm(kind, coeff, multiple, 0))
        return SmoothFn(tuple(terms), self.length, self.prefactor)

    @property
    def is_zero(self):
        return len(self.simplified().terms) == 0

    @property
    def is_constant(self):
        simple = self.simplified()
        return self.prefactor is None and all(t.multiple == 0 for t in simple.terms)

    @property
    def constant_value(self):
        if not self.is_constant:
            return None
        simple = self.simplified()
        return simple.terms[0].coeff if simple.terms else sp.Integer(0)

    def _check_compatible(self, other):
        if not same_length(self.length, other.length):
            raise DistCalcError(f"cannot combine functions on wells of width {self.length} and {other.length}")

    def __add__(self, other):
        self._check_compatible(other)
        if self.prefactor != other.prefactor:
            raise DistCalcError("cannot add functions with different rational prefactors")
        return SmoothFn(self.terms + other.terms, self.length, self.prefactor).simplified()

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        factor = exact(factor)
        terms = tuple(TrigTerm(t.kind, t.coeff * factor, t.multiple, t.phase) for t in self.terms)
        return SmoothFn(terms, self.length, self.prefactor)

    def __mul__(self, other):
        if not isinstance(other, SmoothFn):
            return self.scale(other).simplified()
        self._check_compatible(other)
        if self.prefactor is not None and other.prefactor is not None:
            raise DistCalcError("a product may carry at most one rational prefactor")
        prefactor = self.prefactor or other.prefactor

        # Producto a suma: a = m1 pi x/L + p1 pi, b = m2 pi x/L + p2 pi
        half = sp.Rational(1, 2)
        terms = []
        for s in self.terms:
            for o in other.terms:
                c = s.coeff * o.coeff * half
                diff = (s.multiple - o.multiple, s.phase - o.phase)
                summ = (s.multiple + o.multiple, s.phase + o.phase)
                if s.kind is Trig.SIN and o.kind is Trig.SIN:
                    terms += [TrigTerm(Trig.COS, c, *diff), TrigTerm(Trig.COS, -c, *summ)]
                elif s.kind is Trig.COS and o.kind is Trig.COS:
                    terms += [TrigTerm(Trig.COS, c, *diff), TrigTerm(Trig.COS, c, *summ)]
                elif s.kind is Trig.SIN:
                    terms += [TrigTerm(Trig.SIN, c, *summ), TrigTerm(Trig.SIN, c, *diff)]
                else:
                    terms += [TrigTerm(Trig.SIN, c, *summ), TrigTerm(Trig.SIN, -c, *diff)]
        return SmoothFn(tuple(terms), self.length, prefactor).simplified()

    __rmul__ = __mul__

    def with_prefactor(self, prefactor):
        if self.prefactor is not None:
            raise DistCalcError("function already carries a rational prefactor")
        return SmoothFn(self.terms, self.length, prefactor)

    def numerator(self):
        return SmoothFn(self.terms, self.length, None)

    def derivative(self):
        if self.prefactor is not None:
            raise DistCalcError(f"derivative of a function with prefactor {self.prefactor.value} is not supported")
        terms = []
        for t in self.terms:
            k = self.wavenumber(t.multiple)
            if t.kind is Trig.SIN:
                terms.append(TrigTerm(Trig.COS, t.coeff * k, t.multiple, t.phase))
            else:
                terms.append(TrigTerm(Trig.SIN, -t.coeff * k, t.multiple, t.phase))
        return SmoothFn(tuple(terms), self.length, None)

    def value_at(self, site):
        """
        Valor exacto en una pared. Con prefactor singular en esa pared se toma el limite,
        que existe solo si el numerador se anula alli.

        Raises:
        - NonRemovableSingularity si el numerador no se anula en la singularidad
        """
        numerator = self.numerator()
        raw = sp.expand(sum((t.value_at(site) for t in numerator.terms), sp.Integer(0)))
        if self.prefactor is None:
            return raw
        if self.prefactor.singular_site is not site:
            # 1/x en x = L o 1/(L-x) en x = 0: ambos valen 1/L
            return sp.expand(raw / self.length)
        if raw != 0:
            raise NonRemovableSingularity(
                f"numerator {numerator.to_text()} equals {raw} at x={site.value}, "
                f"so the prefactor {self.prefactor.value} has no finite limit there"
            )
        slope = sp.expand(sum((t.value_at(site) for t in numerator.derivative().terms), sp.Integer(0)))
        # f(x)/x -> f'(0);  f(x)/(L-x) -> -f'(L)
        return slope if site is Site.LEFT else -slope

    def evaluate(self, x):
        """Evaluacion numerica (float) en x, escalar o array; en la singularidad devuelve el limite."""
        x_arr = np.asarray(x, dtype=float)
        length = float(self.length)
        total = np.zeros_like(x_arr, dtype=float)
        for t in self.terms:
            angle = float(t.multiple) * np.pi * x_arr / length + float(t.phase) * np.pi
            fn = np.sin if t.kind is Trig.SIN else np.cos
            total = total + float(t.coeff) * fn(angle)
        if self.prefactor is not None:
            site = self.prefactor.singular_site
            distance = x_arr if site is Site.LEFT else length - x_arr
            singular = distance == 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                total = np.where(singular, 0.0, total / np.where(singular, 1.0, distance))
            if np.any(singular):
                total = np.where(singular, float(self.value_at(site)), total)
        if total.ndim == 0:
            return float(total)
        return total

    def integrate(self):
        """Integral exacta sobre [0, L]."""
        if self.prefactor is not None:
            raise UnsupportedIntegrand(
                f"no closed form for the integral of a function with prefactor {self.prefactor.value}"
            )
        total = sp.Integer(0)
        for t in self.simplified().terms:
            if t.multiple == 0:
                total += t.coeff * self.length
            elif t.kind is Trig.SIN:
                total += t.coeff * self.length / (t.multiple * sp.pi) * (1 - _parity(t.multiple))
        return sp.expand(total)

    def equals(self, other):
        if self.prefactor != other.prefactor:
            return False
        return (self.numerator() - other.numerator()).is_zero

    def to_text(self):
        parts = []
        for t in self.terms:
            angle = f"{t.multiple}*pi*x/L"
            if t.phase:
                angle += f" {'+' if t.phase > 0 else '-'} {abs(t.phase)}*pi"
            parts.append(f"({sp.sstr(t.coeff)})*{t.kind.value}({angle})")
        body = " + ".join(parts) if parts else "0"
        if self.prefactor is not None:
            return f"[{body}]*{self.prefactor.value}"
        return body

    def to_json_dict(self):
        return {
            "prefactor": self.prefactor.value if self.prefactor else None,
            "trig": [
                {
                    "fn": t.kind.value,
                    "coeff": sp.sstr(t.coeff),
                    "coeff_value": float(t.coeff),
                    "multiple": t.multiple,
                    "phase": t.phase,
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_json_dict(cls, data, length):
        terms = tuple(
            TrigTerm(Trig(item["fn"]), sp.sympify(item["coeff"]), int(item["multiple"]), int(item.get("phase", 0)))
            for item in data["trig"]
        )
        prefactor = Prefactor(data["prefactor"]) if data.get("prefactor") else None
        return cls(terms, exact(length), prefactor)


@dataclass(frozen=True)
class Windowed:
    """smooth(x) * theta(x) * theta(L - x)"""
    smooth: SmoothFn


@dataclass(frozen=True)
class BoundaryDelta:
    """coeff(x) * delta(x) en Site.LEFT o coeff(x) * delta(L - x) en Site.RIGHT"""
    site: Site
    coeff: SmoothFn

    @property
    def is_sifted(self):
        return self.coeff.is_constant

    def sifted(self):
        return BoundaryDelta(self.site, SmoothFn.constant(self.coeff.value_at(self.site), self.coeff.length))


@dataclass(frozen=True)
class DistExpr:
    terms: tuple
    length: sp.Expr

    @classmethod
    def zero(cls, length):
        return cls((), exact(length))

    @classmethod
    def window(cls, smooth):
        return cls((Windowed(smooth),), smooth.length)

    @classmethod
    def delta(cls, site, value, length):
        length = exact(length)
        return cls((BoundaryDelta(site, SmoothFn.constant(value, length)),), length)

    def __add__(self, other):
        if not same_length(self.length, other.length):
            raise DistCalcError("cannot add expressions defined on different wells")
        return DistExpr(self.terms + other.terms, self.length)

    def scale(self, factor):
        factor = exact(factor)
        terms = []
        for term in self.terms:
            if isinstance(term, Windowed):
                terms.append(Windowed(term.smooth.scale(factor)))
            else:
                terms.append(BoundaryDelta(term.site, term.coeff.scale(factor)))
        return DistExpr(tuple(terms), self.length)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    @property
    def is_sifted(self):
        return all(t.is_sifted for t in self.terms if isinstance(t, BoundaryDelta))

    def windowed_part(self):
        """Suma de las partes ventaneadas (sin prefactor racional)."""
        smooth = SmoothFn.zero(self.length)
        for term in self.terms:
            if isinstance(term, Windowed):
                if term.smooth.prefactor is not None:
                    raise DistCalcError("windowed part carries a rational prefactor")
                smooth = smooth + term.smooth
        return smooth

    def delta_coefficient(self, site):
        """Coeficiente constante de la delta en `site` (0 si no hay)."""
        total = sp.Integer(0)
        for term in self.terms:
            if isinstance(term, BoundaryDelta) and term.site is site:
                if not term.is_sifted:
                    raise UnsiftedDelta(f"delta at x={site.value} still has a non-constant coefficient")
                total += term.coeff.constant_value
        return sp.expand(total)

    @property
    def is_zero(self):
        return len(canonical(self).terms) == 0

    def wall_values(self):
        """Coeficientes (izquierda, derecha) tras cribar; ambos cero si la expresion no tiene deltas."""
        c = canonical(self)
        return c.delta_coefficient(Site.LEFT), c.delta_coefficient(Site.RIGHT)

    def equals(self, other):
        return (self - other).is_zero

    def to_text(self):
        parts = []
        for term in self.terms:
            if isinstance(term, Windowed):
                parts.append(f"[{term.smooth.to_text()}]*[w]")
            else:
                coeff = sp.sstr(term.coeff.constant_value) if term.is_sifted else term.coeff.to_text()
                parts.append(f"({coeff})*[d({term.site.value})]")
        return " + ".join(parts) if parts else "0"

    def to_json_dict(self):
        terms = []
        for term in self.terms:
            if isinstance(term, Windowed):
                terms.append({"kind": "windowed", **term.smooth.to_json_dict()})
            else:
                terms.append({"kind": "delta", "site": term.site.value, **term.coeff.to_json_dict()})
        return {"length": sp.sstr(self.length), "terms": terms}

    @classmethod
    def from_json_dict(cls, data):
        length = sp.sympify(data["length"])
        terms = []
        for item in data["terms"]:
            smooth = SmoothFn.from_json_dict(item, length)
            if item["kind"] == "windowed":
                terms.append(Windowed(smooth))
            elif item["kind"] == "delta":
                terms.append(BoundaryDelta(Site(item["site"]), smooth))
            else:
                raise DistCalcError(f"unknown term kind {item['kind']!r}")
        return cls(tuple(terms), length)


def sift(e):
    """Sustituye el coeficiente de cada delta por su valor (o limite) en la pared."""
    terms = tuple(t.sifted() if isinstance(t, BoundaryDelta) else t for t in e.terms)
    return DistExpr(terms, e.length)


def canonical(e):
    """
    Forma canonica: criba, un unico termino ventaneado y como mucho una delta por pared.
    Los terminos nulos desaparecen.
    """
    e = sift(e)
    windowed = [t.smooth for t in e.terms if isinstance(t, Windowed)]
    terms = []
    with_prefactor = [s for s in windowed if s.prefactor is not None]
    plain = SmoothFn.zero(e.length)
    for s in windowed:
        if s.prefactor is None:
            plain = plain + s
    if not plain.is_zero:
        terms.append(Windowed(plain.simplified()))
    terms.extend(Windowed(s) for s in with_prefactor)
    for site in (Site.LEFT, Site.RIGHT):
        value = e.delta_coefficient(site)
        if value != 0:
            terms.append(BoundaryDelta(site, SmoothFn.constant(value, e.length)))
    return DistExpr(tuple(terms), e.length)


def differentiate(e):
    """
    Derivada con d theta(x)/dx = delta(x) y d theta(L-x)/dx = -delta(L-x).

    (f theta theta)' = f' theta theta + f(0) delta(x) - f(L) delta(L-x)

    Raises:
    - DeltaDerivativeUnsupported si alguna delta tiene coeficiente no nulo
    """
    e = canonical(e)
    terms = []
    for term in e.terms:
        if isinstance(term, BoundaryDelta):
            raise DeltaDerivativeUnsupported(
                f"differentiating {sp.sstr(term.coeff.constant_value)}*delta at x={term.site.value} "
                "would produce a delta' term"
            )
        f = term.smooth
        terms.append(Windowed(f.derivative()))
        terms.append(BoundaryDelta(Site.LEFT, f))
        terms.append(BoundaryDelta(Site.RIGHT, -f))
    return canonical(DistExpr(tuple(terms), e.length))


def multiply(e, s):
    """
    Producto de una expresion por una funcion suave. theta^2 = theta en la ventana
    y las deltas se vuelven a cribar.
    """
    terms = []
    for term in e.terms:
        if isinstance(term, Windowed):
            terms.append(Windowed(term.smooth * s))
        else:
            terms.append(BoundaryDelta(term.site, term.coeff * s))
    return canonical(DistExpr(tuple(terms), e.length))


def multiply_distributions(a, b):
    """
    Producto de dos expresiones en las que no coinciden deltas: ventana por ventana da
    ventana, y theta(x) theta(L-x) delta(pared) se reduce a la delta de la pared.
    """
    a, b = canonical(a), canonical(b)
    result = DistExpr.zero(a.length)
    for term in a.terms:
        if isinstance(term, Windowed):
            result = result + multiply(b, term.smooth)
        else:
            for other in b.terms:
                if isinstance(other, BoundaryDelta):
                    raise DistCalcError("the product of two boundary deltas is not a distribution")
                product = (term.coeff * other.smooth).value_at(term.site)
                result = result + DistExpr.delta(term.site, product, a.length)
    return canonical(result)


def integrate_over_well(e, full_weight=False):
    """
    Integral de la expresion sobre [0, L]. Cada delta de pared aporta la mitad de su coeficiente
    (int_0^L delta(x) dx = 1/2); con full_weight=True aporta el coeficiente completo, que es la
    integral sobre toda la recta.

    Returns:
    - valor exacto (sympy)
    """
    if not e.is_sifted:
        raise UnsiftedDelta("sift the expression before integrating it")
    weight = sp.Integer(1) if full_weight else sp.Rational(1, 2)
    total = sp.Integer(0)
    for term in e.terms:
        if isinstance(term, Windowed):
            total += term.smooth.integrate()
        else:
            total += weight * term.coeff.constant_value
    return sp.expand(total)


# --- Objetos del pozo infinito ---

def eigenfunction_smooth(n, cfg):
    """u_n(x) = sqrt(2/L) sin(k_n x)"""
    n = check_quantum_number(n)
    L, _, _ = exact_parameters(cfg)
    return SmoothFn.sine(sp.sqrt(2 / L), n, L)


def rewrite_for_right_wall(n, cfg):
    """u_n(x) escrita como sqrt(2/L) sin[k_n (x - L)] cos(k_n L)."""
    n = check_quantum_number(n)
    L, _, _ = exact_parameters(cfg)
    return SmoothFn.sine(sp.sqrt(2 / L) * _parity(n), n, L, phase=-n)


def exact_energy(n, cfg):
    n = check_quantum_number(n)
    L, m, hbar = exact_parameters(cfg)
    k = n * sp.pi / L
    return hbar**2 * k**2 / (2 * m)


@lru_cache(maxsize=None)
def wave_function(n, cfg):
    """Psi_n = u_n theta(x) theta(L-x)"""
    return DistExpr.window(eigenfunction_smooth(n, cfg))


@lru_cache(maxsize=None)
def potential_term(n, cfg):
    """
    V(x) Psi_n(x) = (hbar^2/2m) Psi_n'' + E_n Psi_n, calculado simbolicamente.

    La parte ventaneada se cancela y queda
    sqrt(2/L) (hbar^2/2m) k_n [delta(x) - cos(k_n L) delta(L-x)].
    """
    n = check_quantum_number(n)
    _, m, hbar = exact_parameters(cfg)
    psi = wave_function(n, cfg)
    second = differentiate(differentiate(psi))
    result = canonical(second.scale(hbar**2 / (2 * m)) + psi.scale(exact_energy(n, cfg)))
    if not result.windowed_part().is_zero:
        # No deberia pasar nunca: la ecuacion de Schrodinger se cumple dentro del pozo
        raise DistCalcError(f"windowed part of V*Psi_{n} did not cancel: {result.to_text()}")
    logger.debug("potential_term(%d) = %s", n, result.to_text())
    return result


def force_term(n, j, cfg):
    """
    (d Psi_n/dx) V Psi_j = (hbar^2 / m L) k_n k_j [delta(x) - (-1)^(n+j) delta(L-x)].
    """
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    return multiply_distributions(differentiate(wave_function(n, cfg)), potential_term(j, cfg))


def boundary_term(n, j, cfg):
    """Psi_n V Psi_j cribado; se anula en ambas paredes, asi que su derivada no contribuye."""
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    return multiply_distributions(wave_function(n, cfg), potential_term(j, cfg))


def force_density(n, j, cfg):
    """
    Psi_n (dV/dx) Psi_j = d/dx[Psi_n V Psi_j] - Psi_n' [V Psi_j] - [Psi_n V] Psi_j'.
    """
    total_derivative = differentiate(boundary_term(n, j, cfg))
    return canonical(total_derivative - force_term(n, j, cfg) - force_term(j, n, cfg))


def symmetric_specification_form(n, cfg):
    """
    (hbar^2/2m) [delta(x)/x + delta(L-x)/(L-x)] u_n(x), cribada.

    El termino derecho usa u_n reescrita como sqrt(2/L) sin[k_n (x-L)] cos(k_n L), cuyo
    numerador se anula en x = L y hace evitable la singularidad.
    """
    n = check_quantum_number(n)
    L, m, hbar = exact_parameters(cfg)
    left = BoundaryDelta(Site.LEFT, eigenfunction_smooth(n, cfg).with_prefactor(Prefactor.INV_X))
    right = BoundaryDelta(Site.RIGHT, rewrite_for_right_wall(n, cfg).with_prefactor(Prefactor.INV_L_MINUS_X))
    return canonical(DistExpr((left, right), L).scale(hbar**2 / (2 * m)))


def _superposition_smooth(coeffs, cfg):
    L, _, _ = exact_parameters(cfg)
    psi = SmoothFn.zero(L)
    for n, c in coeffs.items():
        psi = psi + eigenfunction_smooth(n, cfg).scale(c)
    return psi


def superposition_potential_term(coeffs, cfg):
    """sum_n c_n V Psi_n para psi = sum_n c_n u_n (coeffs: {n: c_n})."""
    L, _, _ = exact_parameters(cfg)
    total = DistExpr.zero(L)
    for n, c in coeffs.items():
        total = total + potential_term(n, cfg).scale(c)
    return canonical(total)


def symmetric_specification_form_general(coeffs, cfg):
    """(hbar^2/2m) [delta(x)/x + delta(L-x)/(L-x)] psi(x) con psi = sum_n c_n u_n."""
    L, m, hbar = exact_parameters(cfg)
    psi = _superposition_smooth(coeffs, cfg)
    left = BoundaryDelta(Site.LEFT, psi.with_prefactor(Prefactor.INV_X))
    right = BoundaryDelta(Site.RIGHT, psi.with_prefactor(Prefactor.INV_L_MINUS_X))
    return canonical(DistExpr((left, right), L).scale(hbar**2 / (2 * m)))


def expected_potential_coefficients(n, cfg):
    """Coeficientes (izquierda, derecha) de V Psi_n en forma cerrada."""
    n = check_quantum_number(n)
    L, m, hbar = exact_parameters(cfg)
    amplitude = sp.sqrt(2 / L) * hbar**2 / (2 * m) * n * sp.pi / L
    return amplitude, -_parity(n) * amplitude


def expected_force_integral(n, j, cfg):
    """(hbar^2 / 2 m L) k_n k_j beta_nj"""
    L, m, hbar = exact_parameters(cfg)
    beta_nj = 1 - _parity(n + j)
    return sp.expand(hbar**2 / (2 * m * L) * (n * sp.pi / L) * (j * sp.pi / L) * beta_nj)


def assembled_force_matrix_element(n, j, cfg):
    """<n| dV/dx |j> montado desde la densidad de fuerza; valor exacto."""
    return integrate_over_well(force_density(n, j, cfg))


