"""Nonasymptotic simultaneous confidence bands for band-limited regression.

Thin wrapper over the compiled extension; see the project README for the
method overview and the command line interface.
"""

try:
    from ._kband import (
        eval_interpolant,
        fit_band,
        gram,
        min_norm_interpolant,
        montecarlo,
        pw_kernel,
        run_experiment,
        synth_experiment,
        __version__,
    )
except ImportError:  # pragma: no cover - source checkout with a flat build dir
    from _kband import (
        eval_interpolant,
        fit_band,
        gram,
        min_norm_interpolant,
        montecarlo,
        pw_kernel,
        run_experiment,
        synth_experiment,
        __version__,
    )

__all__ = [
    "pw_kernel",
    "gram",
    "min_norm_interpolant",
    "eval_interpolant",
    "synth_experiment",
    "fit_band",
    "run_experiment",
    "montecarlo",
    "__version__",
]
