"""Exterior Neumann functions of the Helmholtz equation for unions of disks.

Modules
-------
special_functions
    Hankel functions and the fundamental solution.
geometry
    Disk domains, circle grids and configuration files.
quadrature
    Periodic quadrature, Fourier projections and convolution identities.
bem_oracle
    Boundary-element reference solver.
asymptotics
    Small-disk expansions.
inflation
    Growing a disk by marching in its radius.
design
    Greedy placement of disks to match a target scattering matrix.
experiments
    Benchmark drivers shared by the command line, demos and tests.
cli
    The ``helmneumann`` command.
"""

__version__ = "0.1.0"
