"""Exception taxonomy.

Every failure mode raised by this package derives from Rank1ThermoError so
callers (and the CLI exit-code mapping) can tell configuration mistakes from
numeric breakdowns.
"""


class Rank1ThermoError(Exception):
    """Base class for all package errors."""


class ConfigError(Rank1ThermoError):
    """Malformed or inconsistent configuration input (CLI exit code 2)."""


class NumericsError(Rank1ThermoError):
    """Base class for numeric failures (CLI exit code 3)."""


# --- geometry ---

class StepTooLarge(NumericsError):
    """Local truncation error estimate exceeded the configured bound."""


class ChartEscape(NumericsError):
    """Positions requested from a model that has no chart (curvature signals)."""


class DomainError(NumericsError):
    """State outside the model's chart domain (band edge, disk rim)."""


# --- jacobi ---

class BlowUp(NumericsError):
    """Riccati solution crossed the blow-up ceiling.

    Carries the first time the ceiling was crossed as .t_star.
    """

    def __init__(self, t_star, msg=None):
        self.t_star = t_star
        super().__init__(msg or f"riccati blow-up at t = {t_star:.6g}")


class InsufficientBurnIn(NumericsError):
    """Unstable-branch seeds disagree after burn-in; extend the burn window."""


class WindowTooShort(NumericsError):
    """Classification window shorter than the configured minimum."""


# --- lyapunov ---

class NotClosed(NumericsError):
    """Path fails the closure tolerance required for a periodic computation."""


class NoFixedPoint(NumericsError):
    """Periodic Riccati bracket failed (positive curvature contamination)."""


# --- orbits ---

class NoConvergence(NumericsError):
    """Iterative refinement did not meet tolerance within its budget."""


class HypothesisViolation(NumericsError):
    """Negative-curvature hypothesis fails along the input data."""


class NoConnector(NumericsError):
    """No connecting segment found within the search budget."""


class CellOverlap(NumericsError):
    """Section cells cannot be separated at the requested cluster radius."""


class NoCrossing(NumericsError):
    """A library orbit never crosses the section."""


# --- symbolic ---

class ConvergenceFailure(NumericsError):
    """Power iteration hit its cap before reaching tolerance."""


class BracketFailure(NumericsError):
    """Root bracket for the pressure equation is invalid."""


# --- thermo ---

class NonConvexInput(Rank1ThermoError):
    """Curve violates required convexity beyond tolerance."""


class RangeTooNarrow(NumericsError):
    """Asymptotic slopes have not stabilized on the sampled q-range."""


class SourceFailure(NumericsError):
    """Pressure source failed at a grid point (carries .q)."""

    def __init__(self, q, msg=None):
        self.q = q
        super().__init__(msg or f"pressure source failed at q = {q:.6g}")


class MonotonicityViolation(Rank1ThermoError):
    """Nested-family pressure decreased; carries the offending (member, q)."""

    def __init__(self, member, q, msg=None):
        self.member = member
        self.q = q
        super().__init__(msg or f"pressure not monotone at member {member}, q = {q:.6g}")


# --- cli ---

class MissingManifest(ConfigError):
    """Run directory lacks a manifest."""
