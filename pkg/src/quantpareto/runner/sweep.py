"""
Sweep over filter multipliers x quantization settings.

Each run owns its whole state; with ``workers > 1`` runs execute in separate
processes. Only the parent process writes to the results store. A failed run
is recorded with status ``failed`` and the sweep carries on.
"""

import logging
from concurrent.futures import Future, ProcessPoolExecutor, as_completed
from typing import Callable, Optional

from quantpareto.core.errors import ConfigError
from quantpareto.runner.config import ExperimentConfig, SweepGrid
from quantpareto.runner.models import RunResult
from quantpareto.runner.results import ResultsStore
from quantpareto.runner.training import describe_failure, train

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[RunResult], None]


def _run_config(config_json: str) -> tuple[Optional[str], Optional[str]]:
    """Worker entry point: (result JSON, None) or (None, error message)"""
    config = ExperimentConfig.model_validate_json(config_json)
    try:
        return train(config).model_dump_json(), None
    except Exception as e:
        logger.exception("Run %s failed", config.run_id)
        return None, f"{type(e).__name__}: {e}"


def _record(
    config: ExperimentConfig,
    outcome: tuple[Optional[str], Optional[str]],
    store: Optional[ResultsStore],
) -> RunResult:
    result_json, error = outcome
    if result_json is not None:
        result = RunResult.model_validate_json(result_json)
    else:
        result = describe_failure(config)
        logger.warning("Recording failed run %s: %s", config.run_id, error)
    if store is not None:
        store.append(result, config, error)
    return result


def sweep(
    grid: SweepGrid,
    store: Optional[ResultsStore] = None,
    workers: int = 1,
    on_result: Optional[ProgressCallback] = None,
) -> list[RunResult]:
    """Run every grid cell; rows come back in grid order"""
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")

    configs = grid.expand()
    logger.info(
        "Sweeping %d runs (%d multipliers x %d presets) with %d worker(s)",
        len(configs),
        len(grid.resolved_multipliers()),
        len(grid.presets),
        workers,
    )

    results: dict[int, RunResult] = {}
    if workers == 1:
        for i, config in enumerate(configs):
            results[i] = _record(config, _run_config(config.model_dump_json()), store)
            if on_result:
                on_result(results[i])
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures: dict[Future[tuple[Optional[str], Optional[str]]], int] = {
                pool.submit(_run_config, config.model_dump_json()): i
                for i, config in enumerate(configs)
            }
            for future in as_completed(futures):
                i = futures[future]
                try:
                    outcome = future.result()
                except Exception as e:
                    outcome = (None, f"{type(e).__name__}: {e}")
                results[i] = _record(configs[i], outcome, store)
                if on_result:
                    on_result(results[i])

    return [results[i] for i in range(len(configs))]
