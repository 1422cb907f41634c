"""Exact-arithmetic laboratory for dyadic shrinking-target experiments on the
middle-third Cantor set.

The package provides:

* certified doubling-map orbits of digit-stream circle points (`orbit`),
* the Cantor measure's Fourier transform as a certified cosine product
  (`fourier`),
* exact combinatorics behind the polynomial Fourier-decay counting bound
  (`decay`),
* C^2 periodic bump kernels with closed-form Fourier coefficients (`bump`),
* two-route moment estimates of bump sums along orbits (`moments`),
* end-to-end shrinking-target hit-counting experiments (`counting`),
* a reproducible command-line front end (`cli`).
"""

__version__ = "0.1.0"
