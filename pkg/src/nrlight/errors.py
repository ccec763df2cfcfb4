from typing import Optional


class NrlightError(Exception):
    """Base class; `code` is what sweeps record in-row."""

    @property
    def code(self) -> str:
        return type(self).__name__


class ParameterError(NrlightError):
    pass


class DegenerateParams(ParameterError):
    pass


class SingularCoefficient(ParameterError):
    pass


class SolverError(NrlightError):
    pass


class SingularLinearSystem(SolverError):
    pass


class NotARoot(SolverError):
    def __init__(self, intensity: float, residual: float) -> None:
        super().__init__(f"I1={intensity!r} is not a steady intensity (residual {residual:.3e})")
        self.intensity = intensity
        self.residual = residual


class NoConvergence(SolverError):
    def __init__(self, iterations: int, residual: float) -> None:
        super().__init__(f"Newton did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class MarginalStability(SolverError):
    def __init__(self, max_real_part: float) -> None:
        super().__init__(f"Marginal fixed point: max Re(eigenvalue) = {max_real_part:.3e}")
        self.max_real_part = max_real_part


class StepUnderflow(SolverError):
    pass


class ObservableError(NrlightError):
    pass


class ZeroDrive(ObservableError):
    pass


class UndefinedRatio(ObservableError):
    def __init__(self, t_left: float, t_right: float) -> None:
        if t_left > 0 and t_right <= 0:
            limit = float("inf")
        elif t_right > 0 and t_left <= 0:
            limit = float("-inf")
        else:
            limit = float("nan")
        super().__init__(f"Isolation ratio undefined for T_L={t_left!r}, T_R={t_right!r}")
        self.signed_limit = limit


class ConfigError(NrlightError):
    def __init__(self, message: str, path: Optional[str] = None) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class SchemaError(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class UnknownScenario(ConfigError):
    def __init__(self, scenario_id: str) -> None:
        super().__init__(f"Unknown scenario: {scenario_id}", path="scenario")
        self.scenario_id = scenario_id


class SweepCancelled(NrlightError):
    pass
