"""Random lozenge tilings of triangular-lattice domains."""
