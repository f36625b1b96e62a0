"""Fisher-market tatonnement with CES buyers."""

from ._core import (
    BoundReport,
    CesBuyer,
    EqSolution,
    Market,
    MarketFormatError,
    Scenario,
    SolverError,
    TatConfig,
    TheoryInapplicable,
    Trace,
    big_C,
    demand,
    excess_demand,
    h_c,
    load_market,
    max_utility,
    parse_market,
    potential,
    report_csv,
    run,
    run_checks,
    scenario,
    scenario_names,
    solve_equilibrium,
)

__all__ = [name for name in dir() if not name.startswith("_")]
