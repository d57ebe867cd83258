"""Hemisphere moments three ways: exact rational values, spectral
quadrature, and recognition of numeric constants as pi*(p + q*ln2)."""

import math

from hemifol import expr as ex
from hemifol import quadrature as hq

print("Exact monomial moments on the upper hemisphere (coefficients of pi):")
for a, b, c in [(0, 0, 0), (0, 0, 1), (2, 0, 1), (4, 0, 0), (2, 2, 0), (1, 0, 0)]:
    val = hq.surface_moment(hq.Moment(a, b, c))
    print(f"  integral of w1^{a} w2^{b} w3^{c}  =  {val} * pi")

print("\nEquator moments:")
for a, b in [(0, 0), (2, 0), (4, 0)]:
    print(f"  integral of w1^{a} w2^{b} dS  =  {hq.boundary_moment(a, b)} * pi")

print("\nSpectral quadrature agrees with the exact values:")
for text, moment in [("w1^2*w3", (2, 0, 1)), ("w3", (0, 0, 1))]:
    got = hq.integrate_surface(ex.parse(text))
    want = float(hq.surface_moment(hq.Moment(*moment))) * math.pi
    print(f"  {text}: quadrature {got:.15f}, exact {want:.15f}, "
          f"difference {abs(got - want):.2e}")

print("\nConstant recognition in the pi*(p + q*ln2) algebra:")
for x, label in [
    (4 * math.pi * (math.log(2) - 1), "4 pi (ln2 - 1)"),
    (math.pi * 23 / 14, "23 pi / 14"),
    (math.pi * (113 / 30240 - math.log(2) / 9), "pi (113/30240 - ln2/9)"),
]:
    cv = hq.recover_coefficients(x)
    print(f"  {x:+.12f}  ->  {cv}   ({label})")

print("\nValues outside the algebra are rejected:")
try:
    hq.recover_coefficients(math.e)
except hq.NoRationalFit as err:
    print(f"  e: NoRationalFit ({str(err)[:60]}...)")
