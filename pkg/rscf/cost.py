"""FLOP accounting for the robust precoders and the MMSE baselines.

Counts are sympy expressions in N_t, K and i_t and are evaluated exactly, so
the (4/3) m^3 inversion terms never drift through floating point.
"""
import csv
import io
from dataclasses import dataclass, fields

import sympy
from sympy import Rational, symbols

N_t, K, I_t = symbols("N_t K i_t", positive=True, integer=True)


def _check_dims(**dims):
    for name, value in dims.items():
        if isinstance(value, int) and value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")


def flops_matmul(l, m, n):
    """Complex (l x m) times (m x n) product: 8lmn - 2ln real FLOPs."""
    _check_dims(l=l, m=m, n=n)
    return sympy.sympify(8 * l * m * n - 2 * l * n)


def flops_inverse(m):
    """Complex m x m inversion: (4/3) m^3 real FLOPs."""
    _check_dims(m=m)
    return Rational(4, 3) * sympy.sympify(m) ** 3


# Per-step counts of the robust design
COMMON_PRECODER = Rational(4, 3) * N_t**3 + 8 * N_t**2 * K + 8 * N_t * K - 4 * N_t + 1
# Regularised inverse applied to the estimate, plus the diagonal loading
INIT_P_BAR = flops_inverse(N_t) + flops_matmul(N_t, K, N_t) + flops_matmul(N_t, N_t, K) \
    + 2 * N_t + 3
RECEIVE_GAIN = 8 * N_t * K + 2
SCALE_P_P = N_t * K + 1
MULTIPLIER = 8 * N_t**2 * K + 6 * N_t * K + 6
# As INIT_P_BAR, with the scaled error covariance added to the Gram matrix
ITERATION_P_BAR = INIT_P_BAR + 4 * N_t**2

PER_ITERATION = (Rational(4, 3) * N_t**3 + 24 * N_t**2 * K + 2 * N_t**2 + 13 * N_t * K
                 + 2 * N_t + 12)
CONSTANT = (Rational(8, 3) * N_t**3 + 32 * N_t**2 * K + 21 * N_t * K - 2 * N_t**2
            - 2 * N_t + 12)
C_F = I_t * PER_ITERATION + CONSTANT

ITEMISED_CONSTANT = COMMON_PRECODER + INIT_P_BAR + RECEIVE_GAIN + SCALE_P_P + MULTIPLIER
ITEMISED_PER_ITERATION = ITERATION_P_BAR + RECEIVE_GAIN + SCALE_P_P + MULTIPLIER
ITEMISED_C_F = I_t * ITEMISED_PER_ITERATION + ITEMISED_CONSTANT

# Private-only MMSE: one regularised inverse, then the power scaling
CONVENTIONAL_MMSE = INIT_P_BAR + RECEIVE_GAIN + SCALE_P_P


def itemisation_gap():
    """Symbolic difference between the step-by-step sum and the aggregate C_f."""
    return sympy.expand(ITEMISED_C_F - C_F)


def _evaluate(expr, n_t, k, i_t=0):
    return sympy.sympify(expr).subs({N_t: n_t, K: k, I_t: i_t})


def _check_cost_args(n_t, k, i_t):
    _check_dims(n_t=n_t, k=k)
    if i_t < 0:
        raise ValueError(f"i_t must be >= 0, got {i_t}")


def total_cost(n_t, k, i_t):
    """Aggregate FLOP count C_f as an exact sympy number."""
    _check_cost_args(n_t, k, i_t)
    return _evaluate(C_F, n_t, k, i_t)


@dataclass(frozen=True)
class CostReport:
    n_t: int
    k: int
    i_t: int
    common_precoder: object
    init_p_bar: object
    receive_gain: object
    scale_p_p: object
    multiplier: object
    iteration_p_bar: object
    per_iteration: object
    itemised_total: object
    C_f: object
    discrepancy: object      # itemised_total - C_f
    conventional_mmse: object

    def as_row(self):
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}


def cost_report(n_t, k, i_t):
    _check_cost_args(n_t, k, i_t)

    def at(expr):
        return _evaluate(expr, n_t, k, i_t)

    itemised, aggregate = at(ITEMISED_C_F), at(C_F)
    return CostReport(
        n_t, k, i_t,
        common_precoder=at(COMMON_PRECODER),
        init_p_bar=at(INIT_P_BAR),
        receive_gain=at(RECEIVE_GAIN),
        scale_p_p=at(SCALE_P_P),
        multiplier=at(MULTIPLIER),
        iteration_p_bar=at(ITERATION_P_BAR),
        per_iteration=at(PER_ITERATION),
        itemised_total=itemised,
        C_f=aggregate,
        discrepancy=itemised - aggregate,
        conventional_mmse=at(CONVENTIONAL_MMSE),
    )


_TABLE_COLUMNS = (
    ("n_t", "N_t"), ("k", "K"), ("i_t", "i_t"), ("common_precoder", "common"),
    ("init_p_bar", "init"), ("per_iteration", "per-iter"), ("C_f", "C_f"),
    ("itemised_total", "itemised"), ("discrepancy", "diff"),
    ("conventional_mmse", "CF-MMSE"),
)


def format_table(reports):
    """Fixed-width text table, one row per report."""
    rows = [[str(getattr(r, name)) for name, _ in _TABLE_COLUMNS] for r in reports]
    headers = [title for _, title in _TABLE_COLUMNS]
    widths = [max([len(h)] + [len(row[i]) for row in rows]) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows)
    lines.append(f"C_f = {sympy.expand(C_F)}")
    return "\n".join(lines)


def format_csv(reports):
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=[f.name for f in fields(CostReport)],
                            lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report.as_row())
    return out.getvalue()
