"""Minimal decompositions of Fibonacci polynomials acting on the 2-adic integers."""
from .catalog import (BrokenDichotomy, CatalogError, GSequence, UndefinedDigitFunction,
                      UnsupportedM, catalog_case, catalog_decompose, digit_fns, g_sequence,
                      level10_cycle_table)
from .engine import (Behavior, Cycle, CycleAnalysis, PolyMap, analyze_cycle, classify,
                     cycles_at_level, decompose, lifts_of, verify_lift_laws)
from .fibpoly import (FibJet, FibMap, fib_eval_fast, fib_eval_naive, fib_eval_sum, fib_gaussian,
                      period_of)
from .padic import Ball, PrecisionError, Residue, Valuation, ball_partition_check, nu2
from .report import Component, DecompositionReport, compare_reports, partition_check

__version__ = "0.1.0"

__all__ = [
    "Ball", "Behavior", "BrokenDichotomy", "CatalogError", "Component", "Cycle", "CycleAnalysis",
    "DecompositionReport", "FibJet", "FibMap", "GSequence", "PolyMap", "PrecisionError", "Residue",
    "UndefinedDigitFunction", "UnsupportedM", "Valuation", "analyze_cycle", "ball_partition_check",
    "catalog_case", "catalog_decompose", "classify", "compare_reports", "cycles_at_level",
    "decompose", "digit_fns", "fib_eval_fast", "fib_eval_naive", "fib_eval_sum", "fib_gaussian",
    "g_sequence", "level10_cycle_table", "lifts_of", "nu2", "partition_check", "period_of",
    "verify_lift_laws",
]
