"""Extremal orders of nonnegative multiplicative functions.

Computes rho(p) = sup_nu f(p^nu), the Euler product R = prod_p (1 - 1/p) rho(p)
and the constant e^gamma R governing limsup f(n) / log log n, for divisor
functions and Euler-type functions attached to multiplicative divisor
systems.
"""

__version__ = "0.1.0"

from .divisors import (
    ContractError,
    DivisorSystem,
    InvalidSystemError,
    SystemWitness,
    a_divisors,
    builtin_system,
    check_multiplicative,
    convolve_at,
    pathological_two_power_system,
    table_system,
)
from .extremal import (
    EXP_GAMMA,
    EXP_MINUS_GAMMA,
    SIX_OVER_PI2,
    HypothesisViolation,
    InfiniteLocalFactor,
    PrimeSetFilter,
    ProductEstimate,
    RhoEstimate,
    alternating_decomposition,
    alternating_sum,
    local_factor,
    maximal_order_constant,
    minimal_order_constant_phi,
    r_product,
    rho,
)
from .functions import (
    MultFn,
    PhiTable,
    RhoHint,
    TailEnvelope,
    Unsolvable,
    evaluate,
    id_over_phi,
    log_evaluate,
    phi_a,
    phi_bounds_check,
    phi_exponential_closed_form,
    sigma_a,
    sigma_over_id,
    solve_phi,
    table_function,
)
from .primes import Factored, PrimeTable, factorize, mertens_product, primes_up_to
from .constructions import (
    ChampionPoint,
    CounterexampleFn,
    build_champion,
    build_counterexample,
    build_phi_champion,
    champion_series,
    counterexample_scan,
    default_schedule,
    empirical_scan,
    height_probes,
    unbounded_witness,
)
