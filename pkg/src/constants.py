"""
Constants for the Fractional KdV Solver
Contains model defaults, named example setups, and output configuration
"""

import math

# Equation defaults (u_t + lam u u_x - eps^2 D^alpha u_x = 0 on [-L, L])
DEFAULT_MODEL = {
    'alpha': 2.0,
    'eps': 1.0,
    'lam': 6.0,
    'half_length': math.pi,
}

# Discretization defaults; dt = None means 1 / (dt_divisor * N * ||P_N u0||_inf)
DEFAULT_SOLVER = {
    'n_modes': 128,
    'dt': None,
    'dt_divisor': 1.0,
    't_final': 1.0,
    'fp_tolerance': 1e-12,
    'fp_max_iters': 100,
    'zeta': 0.5,
    'enforce_cfl': False,
}

DEFAULT_INITIAL = {
    'name': 'sine',
    'amplitude': 0.5,
    'wavenumber': 1,
    'c': 0.25,
    'path': None,
}

DEFAULT_OUTPUT = {
    'out_dir': 'fkdv_output',
    'format': 'csv',
    'snapshot_times': [],
}

# Study tables; None means the named setup or the sweep scale decides
DEFAULT_CONVERGE = {
    'setup': None,
    'n_list': None,
    'reference_n': None,
}

DEFAULT_ZDL = {
    'initial': 'sech2',
    'n_modes': None,
    'eps_list': None,
    't_eval': None,
    'dt_divisor': None,
    'reference': 'hopf',
    'beta_file': None,
    'q': 0.0,
    'window': None,
    'full': False,
}

ZDL_MODEL = {
    'alpha': 1.999,
    'lam': 6.0,
}

DEFAULT_REFERENCE = {
    'kind': None,
    't': 0.0,
    'c': 0.25,
    'initial': 'sech2',
    'beta_file': None,
    'q': 0.0,
    'points': 1001,
}

REFERENCE_MODEL = {
    'alpha': 2.0,
    'eps': 1.0,
    'half_length': 15.0,
}

# Named initial data accepted in run specs
INITIAL_DATA = ['sech2', 'sine', 'kdv-soliton', 'bo-soliton', 'samples-file']

# Parameter ranges (inclusive)
PARAMETER_LIMITS = {
    'alpha': (1.0, 2.0),
    'n_modes': (1, 2 ** 17),
    'amplitude': (-1e3, 1e3),
    'wavenumber': (1, 2 ** 12),
}

# Named example configurations
EXAMPLE_SETUPS = {
    'example-5.1': {
        'model': {'alpha': 1.999, 'eps': 1.0, 'lam': 1.0, 'half_length': 15.0},
        'initial': {'name': 'kdv-soliton'},
        't_final': 2.0,
        'dt_divisor': 1.0,
        'reference': 'exact',
        'n_list': [128, 256, 512],
    },
    'example-5.2': {
        'model': {'alpha': 1.01, 'eps': 1.0, 'lam': 1.0, 'half_length': 15.0},
        'initial': {'name': 'bo-soliton', 'c': 0.25},
        't_final': 20.0,
        'dt_divisor': 1.0,
        'reference': 'exact',
        'n_list': [64, 128, 256],
    },
    'example-5.3': {
        'model': {'alpha': 1.5, 'eps': 1.0, 'lam': 1.0, 'half_length': math.pi},
        'initial': {'name': 'sine', 'amplitude': 0.5, 'wavenumber': 1},
        't_final': 2.0,
        'dt_divisor': 1.0,
        'reference': 'self',
        'n_list': [128, 256],
    },
    'example-4.1': {
        'model': {'alpha': 1.999, 'eps': 0.1, 'lam': 6.0, 'half_length': 6.0},
        'initial': {'name': 'sech2'},
        't_final': 0.2,
        'dt_divisor': 8.0,
        'reference': 'hopf',
        'n_list': [4096],
    },
}

# Zero-dispersion sweeps: desk scale by default, full scale with --full
ZDL_DESK = {
    'n_modes': 2 ** 12,
    'half_length': 6.0,
    'eps_list': [10 ** -1.0, 10 ** -1.5, 10 ** -2.0, 10 ** -2.5],
    't_eval': 0.2,
    'dt_divisor': 8.0,
}

ZDL_FULL = {
    'n_modes': 2 ** 16,
    'half_length': 6.0,
    'eps_list': [10 ** -1.0, 10 ** -1.5, 10 ** -2.0, 10 ** -2.5, 10 ** -3.0, 10 ** -3.5],
    't_eval': 0.2,
    'dt_divisor': 8.0,
}

# Reference kinds for zero-dispersion error tables
REFERENCE_KINDS = ['hopf', 'elliptic-file', 'exact']

# Solutions the reference command evaluates
REFERENCE_OUTPUTS = ['kdv-soliton', 'bo-soliton', 'hopf', 'elliptic']

# Self-reference resolution factor for convergence studies without an exact solution
SELF_REFERENCE_FACTOR = 8

# Output settings
CSV_FLOAT_FORMAT = '%.17g'
OUTPUT_FORMATS = ['csv', 'parquet', 'json']

CONVERGENCE_COLUMNS = ['N', 'E', 'R', 'I1', 'I2', 'I3', 'status']
SWEEP_COLUMNS = ['eps', 'E', 't', 'reference_kind']
DIAGNOSTIC_COLUMNS = ['step', 'iterations', 'residual', 'contraction_ratio']
MODE_COLUMNS = ['k', 're', 'im']

# Process exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

# Environment variable capping the worker pool
THREADS_ENV_VAR = 'FKDV_NUM_THREADS'

PACKAGE_VERSION = '0.1.0'
