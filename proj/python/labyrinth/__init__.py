"""Atom trajectories in a parabolic optical lattice."""

from ._labyrinth import (
    AnalysisError,
    Beam,
    Config,
    ConfigError,
    ForceLaw,
    FormatError,
    IntegrationError,
    Lattice,
    Parity,
    __version__,
    classify_motion,
    permanency_histogram,
    power_spectrum,
    run_cli,
)


def main(args=None):
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if args is None else args))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
