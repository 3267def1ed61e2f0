"""Module-lattice reduction over power-of-two cyclotomic rings."""

__version__ = "0.1.0"
