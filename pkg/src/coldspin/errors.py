"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A configuration value, document, or function argument is invalid."""


class NearResonanceError(ValueError):
    """Probe detuning too close to an excited-state resonance.

    The dispersive model neglects absorption and is only valid far from
    resonance; operations refuse to evaluate inside the guard band.
    """


class FitError(RuntimeError):
    """A fit cannot be evaluated on the given data (too few points,
    degenerate design, or an unphysical result)."""
