__all__ = [
    "scenarios",
    "sweep",
    "runner",
    "utils",
]
