"""Reduced-size parameter sets for every CLI subcommand, shared by the CLI and acceptance tests."""

SMALL = {
    "pressure": {"beta": 1.5, "alpha0": 0.25, "h": 0.1},
    "phase-diagram": {"alpha0": [0.2, 0.5], "beta_max": 4, "n_beta": 6},
    "bad-set": {"beta": 5, "t": 0.6, "grid": 60},
    "typical-vs-bad": {"t": [0.1, 0.4], "grid": 60},
    "dobrushin-region": {"beta": 2, "grid": 40},
    "lattice-checkerboard": {"box": 8, "radius": 2, "n_samples": 200, "chains": 4, "burn_in": 50, "thin": 2},
    "continuum-percolation": {"lam": [1, 2], "side": 5, "n_seeds": 3, "steps": 3000},
    "tree-critical": {"alpha0": [0.05], "beta_max": 3},
}
