"""Numerical laboratory for boundary Hardy inequalities with iterated-log weights.

Modules: logweights (the weight chain), geometry (domains and boundary
distance), functions (analytic test functions), seminorms (Gagliardo and BV
quantities), hardy (weighted integrals and verifiers), extremal (ratio
search) and cli (batch front-end).
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
