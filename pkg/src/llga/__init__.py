"""Simulation, exact analysis and theory checks for the (1+(lambda,lambda)) GA on OneMax."""
from __future__ import annotations

from .bitcore import BitString, ContractError, GaParams, RandomSource, derive_seed
from .engine import IterationTrace, RunResult, run_iteration, run_until_distance, run_until_optimum
from .fitness import EvaluationCounter, FitnessFunction, evaluate, fitness_distance
from .oracle import OracleSizeError, build_kernel, expected_times

__all__ = [
    "BitString", "ContractError", "GaParams", "RandomSource", "derive_seed",
    "IterationTrace", "RunResult", "run_iteration", "run_until_distance", "run_until_optimum",
    "EvaluationCounter", "FitnessFunction", "evaluate", "fitness_distance",
    "OracleSizeError", "build_kernel", "expected_times",
]
