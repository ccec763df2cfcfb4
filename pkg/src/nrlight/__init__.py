__all__ = [
    "models",
    "errors",
    "mean_field",
    "steady",
    "dynamics",
    "observables",
    "experiments",
    "config",
    "serialization",
    "cache",
    "cli",
]
__version__ = "0.1.0"
