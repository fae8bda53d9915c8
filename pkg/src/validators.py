"""
Input Validation for the Fractional KdV Solver
Validates run specifications before any computation starts
"""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .constants import (
    EXAMPLE_SETUPS, INITIAL_DATA, OUTPUT_FORMATS, PARAMETER_LIMITS, REFERENCE_KINDS, REFERENCE_OUTPUTS,
)


class ValidationError(ValueError):
    """Custom exception for validation failures, carrying every message found"""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


class InputValidator:
    """Centralized input validation logic"""

    @staticmethod
    def validate_positive(name: str, value) -> Tuple[bool, str]:
        if not _is_number(value) or value <= 0:
            return False, f"{name} must be a positive number. Got: {value}"
        return True, ""

    @staticmethod
    def validate_alpha(alpha) -> Tuple[bool, str]:
        """
        Verify the fractional order lies in [1, 2]

        Args:
            alpha (float): Fractional order

        Returns:
            Tuple[bool, str]: (is_valid, error_message)
        """
        low, high = PARAMETER_LIMITS['alpha']
        if not _is_number(alpha) or not (low <= alpha <= high):
            return False, f"model.alpha must be between {low} and {high}. Got: {alpha}"
        return True, ""

    @staticmethod
    def validate_model(model: Dict) -> List[str]:
        """
        Validate the [model] table

        Args:
            model (Dict): alpha, eps, lam, half_length

        Returns:
            List[str]: Error messages (empty when valid)
        """
        errors = []
        is_valid, message = InputValidator.validate_alpha(model.get('alpha'))
        if not is_valid:
            errors.append(message)
        for key in ('eps', 'half_length'):
            is_valid, message = InputValidator.validate_positive(f"model.{key}", model.get(key))
            if not is_valid:
                errors.append(message)
        lam = model.get('lam')
        if not _is_number(lam) or lam < 0:
            errors.append(f"model.lam must be a non-negative number. Got: {lam}")
        return errors

    @staticmethod
    def validate_solver(solver: Dict) -> List[str]:
        """
        Validate the [solver] table

        Args:
            solver (Dict): n_modes, dt, dt_divisor, t_final, fp_tolerance, fp_max_iters, zeta, enforce_cfl

        Returns:
            List[str]: Error messages (empty when valid)
        """
        errors = []
        errors.extend(InputValidator.validate_n_modes("solver.n_modes", solver.get('n_modes')))

        if solver.get('dt') is not None:
            is_valid, message = InputValidator.validate_positive("solver.dt", solver['dt'])
            if not is_valid:
                errors.append(message)

        for key in ('dt_divisor', 'fp_tolerance'):
            is_valid, message = InputValidator.validate_positive(f"solver.{key}", solver.get(key))
            if not is_valid:
                errors.append(message)

        t_final = solver.get('t_final')
        if not _is_number(t_final) or t_final < 0:
            errors.append(f"solver.t_final must be a non-negative number. Got: {t_final}")

        max_iters = solver.get('fp_max_iters')
        if not isinstance(max_iters, int) or isinstance(max_iters, bool) or max_iters < 1:
            errors.append(f"solver.fp_max_iters must be a positive integer. Got: {max_iters}")

        zeta = solver.get('zeta')
        if not _is_number(zeta) or not (0 < zeta < 1):
            errors.append(f"solver.zeta must be between 0 and 1 (exclusive). Got: {zeta}")

        if not isinstance(solver.get('enforce_cfl'), bool):
            errors.append(f"solver.enforce_cfl must be true or false. Got: {solver.get('enforce_cfl')}")
        return errors

    @staticmethod
    def validate_initial(initial: Dict, half_length: Optional[float] = None) -> List[str]:
        """
        Validate the [initial] table (named datum and its parameters)

        Args:
            initial (Dict): name plus datum parameters
            half_length (float, optional): Domain half length, checked against the wave condition

        Returns:
            List[str]: Error messages (empty when valid)
        """
        errors = []
        name = initial.get('name')
        if name not in INITIAL_DATA:
            return [f"initial.name must be one of {INITIAL_DATA}. Got: {name}"]

        if name == 'sine':
            low, high = PARAMETER_LIMITS['amplitude']
            amplitude = initial.get('amplitude')
            if not _is_number(amplitude) or not (low <= amplitude <= high):
                errors.append(f"initial.amplitude must be between {low} and {high}. Got: {amplitude}")
            low, high = PARAMETER_LIMITS['wavenumber']
            wavenumber = initial.get('wavenumber')
            if not isinstance(wavenumber, int) or not (low <= wavenumber <= high):
                errors.append(f"initial.wavenumber must be an integer between {low} and {high}. Got: {wavenumber}")

        if name == 'bo-soliton':
            c = initial.get('c')
            is_valid, message = InputValidator.validate_positive("initial.c", c)
            if not is_valid:
                errors.append(message)
            elif _is_number(half_length) and c * half_length < math.pi:
                errors.append(f"initial.c * model.half_length must be at least pi for the periodic wave. Got: {c * half_length}")

        if name == 'samples-file':
            path = initial.get('path')
            if not path:
                errors.append("initial.path is required for samples-file")
            elif not Path(path).is_file():
                errors.append(f"initial.path does not exist: {path}")
        return errors

    @staticmethod
    def validate_snapshot_times(times: Sequence[float], t_final: float) -> List[str]:
        errors = []
        for t in times or []:
            if not _is_number(t) or not _is_number(t_final) or not (0 <= t <= t_final):
                errors.append(f"output.snapshot_times entries must be between 0 and {t_final}. Got: {t}")
        return errors

    @staticmethod
    def validate_output(output: Dict) -> List[str]:
        errors = []
        if output.get('format') not in OUTPUT_FORMATS:
            errors.append(f"output.format must be one of {OUTPUT_FORMATS}. Got: {output.get('format')}")
        if not output.get('out_dir'):
            errors.append("output.out_dir cannot be empty")
        return errors

    @staticmethod
    def validate_n_list(n_list: Sequence[int]) -> Tuple[bool, str]:
        """
        Check a list of resolutions for a convergence study

        Returns:
            Tuple[bool, str]: (is_valid, error_message)
        """
        if not n_list:
            return False, "At least one resolution must be given"
        if any(not isinstance(n, int) or n < 1 for n in n_list):
            return False, f"Resolutions must be positive integers. Got: {list(n_list)}"
        if any(b <= a for a, b in zip(n_list[:-1], n_list[1:])):
            return False, f"Resolutions must be strictly increasing. Got: {list(n_list)}"
        return True, ""

    @staticmethod
    def validate_eps_list(eps_list: Sequence[float]) -> Tuple[bool, str]:
        if not eps_list:
            return False, "At least one eps value must be given"
        if any(not _is_number(eps) or eps <= 0 for eps in eps_list):
            return False, f"eps values must be positive. Got: {list(eps_list)}"
        return True, ""

    @staticmethod
    def validate_setup_name(name: str) -> Tuple[bool, str]:
        if name not in EXAMPLE_SETUPS:
            return False, f"Invalid setup: {name}. Must be one of {sorted(EXAMPLE_SETUPS)}"
        return True, ""

    @staticmethod
    def validate_reference_kind(kind: str, beta_path: Optional[str] = None) -> Tuple[bool, str]:
        if kind not in REFERENCE_KINDS:
            return False, f"Invalid reference kind: {kind}. Must be one of {REFERENCE_KINDS}"
        if kind == 'elliptic-file':
            if not beta_path:
                return False, "Reference kind elliptic-file needs --beta-file"
            if not Path(beta_path).is_file():
                return False, f"Beta profile does not exist: {beta_path}"
        return True, ""

    @staticmethod
    def validate_window(window, half_length) -> Tuple[bool, str]:
        """
        Check a sup-error window a,b against the domain [-L, L]

        Returns:
            Tuple[bool, str]: (is_valid, error_message)
        """
        if window is None:
            return True, ""
        if not isinstance(window, (list, tuple)) or len(window) != 2 or not all(_is_number(v) for v in window):
            return False, f"zdl.window must be two positions a,b. Got: {window}"
        if not window[0] < window[1]:
            return False, f"zdl.window must be increasing. Got: {list(window)}"
        if _is_number(half_length) and (window[0] < -half_length or window[1] > half_length):
            return False, f"zdl.window must lie inside [-{half_length}, {half_length}]. Got: {list(window)}"
        return True, ""

    @staticmethod
    def validate_n_modes(name: str, n_modes) -> List[str]:
        low, high = PARAMETER_LIMITS['n_modes']
        if not isinstance(n_modes, int) or isinstance(n_modes, bool) or not (low <= n_modes <= high):
            return [f"{name} must be an integer between {low} and {high}. Got: {n_modes}"]
        return []

    @staticmethod
    def validate_converge(settings: Dict) -> List[str]:
        """
        Validate a convergence study: [converge] and [output]

        Returns:
            List[str]: Error messages (empty when valid)
        """
        converge = settings.get('converge', {})
        errors = []
        is_valid, message = InputValidator.validate_setup_name(converge.get('setup'))
        if not is_valid:
            errors.append(f"converge.setup: {message}")
        is_valid, message = InputValidator.validate_n_list(converge.get('n_list') or [])
        if not is_valid:
            errors.append(f"converge.n_list: {message}")
        if converge.get('reference_n') is not None:
            errors.extend(InputValidator.validate_n_modes("converge.reference_n", converge['reference_n']))
        errors.extend(InputValidator.validate_output(settings.get('output', {})))
        return errors

    @staticmethod
    def validate_zdl(settings: Dict) -> List[str]:
        """
        Validate a zero-dispersion sweep: [model], [zdl] and [output]

        Returns:
            List[str]: Error messages (empty when valid)
        """
        model = settings.get('model', {})
        zdl = settings.get('zdl', {})
        eps_list = zdl.get('eps_list') or []
        errors = []
        is_valid, message = InputValidator.validate_eps_list(eps_list)
        if not is_valid:
            errors.append(f"zdl.eps_list: {message}")
        first_eps = eps_list[0] if is_valid else 1.0
        errors.extend(InputValidator.validate_model({**model, 'eps': first_eps}))

        errors.extend(InputValidator.validate_n_modes("zdl.n_modes", zdl.get('n_modes')))
        for key in ('t_eval', 'dt_divisor'):
            is_valid, message = InputValidator.validate_positive(f"zdl.{key}", zdl.get(key))
            if not is_valid:
                errors.append(message)
        if zdl.get('initial') not in INITIAL_DATA or zdl.get('initial') == 'samples-file':
            errors.append(f"zdl.initial must be a named datum other than samples-file. Got: {zdl.get('initial')}")

        kind = zdl.get('reference')
        if kind == 'exact':
            errors.append("zdl.reference must be hopf or elliptic-file. Got: exact")
        else:
            is_valid, message = InputValidator.validate_reference_kind(kind, zdl.get('beta_file'))
            if not is_valid:
                errors.append(f"zdl.reference: {message}")
        if not _is_number(zdl.get('q')):
            errors.append(f"zdl.q must be a number. Got: {zdl.get('q')}")
        is_valid, message = InputValidator.validate_window(zdl.get('window'), model.get('half_length'))
        if not is_valid:
            errors.append(message)
        errors.extend(InputValidator.validate_output(settings.get('output', {})))
        return errors

    @staticmethod
    def validate_reference(settings: Dict) -> List[str]:
        """
        Validate a reference evaluation: [model], [reference] and [output]

        Returns:
            List[str]: Error messages (empty when valid)
        """
        reference = settings.get('reference', {})
        kind = reference.get('kind')
        errors = []
        if kind not in REFERENCE_OUTPUTS:
            errors.append(f"reference.kind must be one of {REFERENCE_OUTPUTS}. Got: {kind}")
        errors.extend(InputValidator.validate_model(settings.get('model', {})))

        t = reference.get('t')
        if not _is_number(t) or t < 0:
            errors.append(f"reference.t must be a non-negative number. Got: {t}")
        points = reference.get('points')
        if not isinstance(points, int) or isinstance(points, bool) or points < 2:
            errors.append(f"reference.points must be an integer of at least 2. Got: {points}")
        if kind == 'bo-soliton':
            is_valid, message = InputValidator.validate_positive("reference.c", reference.get('c'))
            if not is_valid:
                errors.append(message)
        initial = reference.get('initial')
        if kind == 'hopf' and (initial not in INITIAL_DATA or initial == 'samples-file'):
            errors.append(f"reference.initial must be a named datum other than samples-file. Got: {initial}")
        if kind == 'elliptic':
            is_valid, message = InputValidator.validate_reference_kind('elliptic-file', reference.get('beta_file'))
            if not is_valid:
                errors.append(f"reference.beta_file: {message}")
        errors.extend(InputValidator.validate_output(settings.get('output', {})))
        return errors

    @staticmethod
    def validate_run_spec(spec: Dict) -> None:
        """
        Validate a complete run specification, reporting all failures at once

        Args:
            spec (Dict): Tables model, solver, initial, output

        Raises:
            ValidationError: With every message found
        """
        model = spec.get('model', {})
        solver = spec.get('solver', {})
        errors = []
        errors.extend(InputValidator.validate_model(model))
        errors.extend(InputValidator.validate_solver(solver))
        errors.extend(InputValidator.validate_initial(spec.get('initial', {}), model.get('half_length')))
        errors.extend(InputValidator.validate_output(spec.get('output', {})))
        errors.extend(InputValidator.validate_snapshot_times(
            spec.get('output', {}).get('snapshot_times', []), solver.get('t_final')
        ))
        if errors:
            raise ValidationError(errors)
