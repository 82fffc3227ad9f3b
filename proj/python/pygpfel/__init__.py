"""Online-learning feedback linearization with Gaussian processes."""

from ._core import (
    GP,
    ConfigError,
    ContractViolation,
    Kernel,
    NumericalDegeneracy,
    kernel_eval,
    preset_names,
    preset_text,
    run,
    run_preset,
    se_kernel,
    sum_kernel,
    validate_config,
)

__all__ = [
    "GP",
    "ConfigError",
    "ContractViolation",
    "Kernel",
    "NumericalDegeneracy",
    "kernel_eval",
    "preset_names",
    "preset_text",
    "run",
    "run_preset",
    "se_kernel",
    "sum_kernel",
    "validate_config",
]
