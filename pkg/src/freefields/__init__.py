"""Classical commuting random fields built on free quantum-field kernels.

Subpackages cover: fixed Minkowski conventions (`geometry`), Gaussian
wave-packet test functions (`packets`), mass-shell pre-inner products
(`shell`), exact normal-ordering engines with a truncated-Fock oracle
(`oscillator`), the electromagnetic / complex scalar-pair field suites
(`emfield`), the spinor field suites with bilocal scans (`diracfield`),
bosonic presentations of fermion bilinears with event densities
(`dressing`), phase-space operator lifts (`koopman`), and the verification
CLI (`cli`).
"""

__version__ = "0.1.0"
