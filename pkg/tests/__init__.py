"""nrlight test suite. Run with `python -m unittest discover -s tests`."""
