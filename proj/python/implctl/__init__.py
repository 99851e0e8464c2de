"""Implement lateral-error controllers: path geometry, closed-loop simulation,
comparison and horizon sweep.

Most functions are thin wrappers over the C++ core. Scenarios are passed as
text in the same format as the ``implctl`` command-line tool reads.
"""

from ._core import (
    CSV_HEADER,
    ConfigError,
    DomainError,
    RangeError,
    ReferencePath,
    SingularityError,
    alpha_gamma,
    build_experiment_path,
    build_path,
    cli,
    compare,
    control_step,
    controller_preset,
    desired_heading,
    e_I_prime,
    e_I_second,
    implement_error_measured,
    prediction_cost,
    preset_names,
    run_scenario,
    sigma_terms,
    steering_command,
    sweep,
    validate_scenario,
    wrap_angle,
    xi_optimal,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def run_scenario_file(path):
    """Runs the scenario stored at ``path``."""
    with open(path, encoding="utf-8") as f:
        return run_scenario(f.read())
