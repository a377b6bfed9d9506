# config.py

TOOL_NAME = "symbion"
TOOL_VERSION = "1.0.0"

# ---------------- 1D / 2D numerical automaton ----------------

WORLD1D = {
    "length": 256,
    "generations": 512,
    "boundary": "periodic",
    "norm": "zero",
    "genes": 10,
    "value_min": 1,
    "value_max": 8,
    "region_width": 16,
    "fill": 0.9,
}

WORLD2D = {
    "width": 64,
    "height": 64,
    "generations": 256,
    "norm": "zero",
    "fill": 0.2,
    "value_max": 4,
}

# ---------------- Gated Boolean CA ----------------

GATE = {
    "rule": 110,
    "radius": 2,
    "threshold": 2,
    "length": 256,
    "generations": 512,
    "density": 0.5,
}

# ---------------- DNA norms ----------------

SOUP = {
    "cycles": 400,
    "mutation_rate": 1e-4,
    "min_overlap": 4,
    "split_min_len": 8,
    "pool_per_base": 2500,
    "initial_strands": 50,
    "initial_length": 4,
    "association_pairs": 64,
    "elongation_prob": 1.0,
    "extend_overhangs": True,
}

LATTICE = {
    "sites": 512,
    "cycles": 512,
    "diffusion_rate": 0.1,
    "initial_budget": 16.0,
    "occupancy": 1.0,
    "top_m": 8,
    "canonical": True,
    # local norms on the ring; sites start full with short strands that grow slowly
    "initial_length": 6,
    "min_overlap": 3,
    "split_min_len": 3,
    "elongation_prob": 0.01,
}

# ---------------- Analysis ----------------

MOTIF_KS = [2, 3, 4, 5, 6, 7, 8]
LATTICE_KS = [4, 6, 8]
REPEAT_THRESHOLD = 0.10
WILSON_Z95 = 1.959964

# ---------------- Robustness ----------------

ROBUSTNESS = {
    "length": 128,
    "generations": 128,
    "boundary": "periodic",
    "norm": "zero",
    "organism": [1, -1],
    "values": [-8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8],
    "distances": [4, 8, 16, 32],
}
