"""Exception types raised by the analysis routines."""

from __future__ import annotations


class GodronError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class SurfaceSyntaxError(GodronError, ValueError):
    code = "syntax"

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnsupportedOperator(SurfaceSyntaxError):
    code = "unsupported-operator"


class DegreeOverflow(GodronError, ValueError):
    code = "degree-overflow"


class DegenerateSurface(GodronError, ValueError):
    code = "degenerate-surface"


class NotParabolic(GodronError):
    code = "not-parabolic"


class DegenerateHessian(GodronError):
    code = "degenerate-hessian"


class DegenerateJet(GodronError):
    code = "degenerate-jet"


class OffSurface(GodronError):
    code = "off-surface"


class DegenerateFrame(GodronError):
    code = "degenerate-frame"


class ResolutionTooCoarse(GodronError):
    code = "resolution-too-coarse"


class InsufficientSamples(GodronError):
    code = "insufficient-samples"


class NoSignChange(GodronError):
    code = "no-sign-change"


class SeedFailure(GodronError):
    code = "seed-failure"


class BranchTraceFailure(GodronError):
    code = "branch-trace-failure"


class IndeterminateIndex(GodronError):
    code = "indeterminate-index"

    def __init__(self, winding: int, determinant: float):
        self.winding = winding
        self.determinant = determinant
        super().__init__(f"winding number {winding} disagrees with linearization determinant {determinant:.3e}")


class DegenerateRho(GodronError):
    code = "degenerate-rho"


class NewtonDivergence(GodronError):
    code = "newton-divergence"


class StepTooCoarse(GodronError):
    code = "step-too-coarse"


class InconsistentRoutes(GodronError):
    code = "inconsistent-routes"


class SingularEncounter(GodronError):
    code = "singular-encounter"


class SeedExhaustion(GodronError):
    code = "seed-exhaustion"
