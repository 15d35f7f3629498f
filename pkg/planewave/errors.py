# errors.py
"""
Exception hierarchy for planewave-bundle.

The CLI maps these onto its exit-code table:
  ConfigError / PreconditionError  -> 2
  FieldFormatError                 -> 3
  NumericalInvariantError          -> 4
"""


class PlanewaveError(Exception):
    """Root of every error raised by the package."""


class ConfigError(PlanewaveError, ValueError):
    """Invalid or unknown configuration entry."""


class PreconditionError(PlanewaveError, ValueError):
    """An operation was called outside its domain."""


class ResolutionError(PreconditionError):
    """The grid cannot resolve the requested frequency or cutoff ramp."""


class MeanObstructionError(PreconditionError):
    """Nonzero-mean input to an inverse operator on the torus."""


class InfeasibleDecompositionError(PlanewaveError):
    """No convex combination over the sampled sphere mesh reproduces the state."""


class HullTooThinError(PlanewaveError):
    """No wave-cone direction with positive admissible half-length was found."""


class NumericalInvariantError(PlanewaveError, RuntimeError):
    """A constructed object violates an identity it must satisfy."""


class FieldFormatError(PlanewaveError, OSError):
    """Malformed field file (bad magic, header or payload length)."""


EXIT_CODES = {
    ConfigError: 2,
    PreconditionError: 2,
    FieldFormatError: 3,
    NumericalInvariantError: 4,
    InfeasibleDecompositionError: 4,
    HullTooThinError: 4,
}


def exit_code_for(exc):
    """Exit code for an exception, walking the MRO so subclasses inherit their parent's code."""
    for klass in type(exc).__mro__:
        if klass in EXIT_CODES:
            return EXIT_CODES[klass]
    return 1
