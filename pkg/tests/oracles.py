"""Independent reference computations used only by the tests.

``slot_outcomes`` enumerates every photon-level outcome of one slot
explicitly (which emitted photons reach Eve, which forwarded photons reach
Bob, which arriving photons are detected) and sums the pattern
probabilities. No binomial coefficients or closed forms are used, so it
checks the enumeration module's algebra rather than repeating it.
"""
from __future__ import annotations

import itertools
import math


def poisson(mean: float, j: int) -> float:
    return mean**j * math.exp(-mean) / math.factorial(j)


def _patterns(n: int, p: float):
    """Yield (number of successes, probability) for every success pattern of n trials."""
    for bits in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for b in bits:
            prob *= p if b else (1.0 - p)
        yield sum(bits), prob


def slot_outcomes(mean: float, psi_ae: float, psi_eb: float, eta: float, J: int = 4) -> dict:
    """Per-slot probabilities: ``eve[k]``, ``op[k]``, ``pd[k]`` keyed by Eve's received count."""
    eve = {k: 0.0 for k in range(2, J + 1)}
    op = {k: 0.0 for k in range(2, J + 1)}
    pd = {k: 0.0 for k in range(2, J + 1)}
    for j in range(J + 1):
        pj = poisson(mean, j)
        for k, p_eve in _patterns(j, psi_ae):
            if k < 2:
                continue
            w = pj * p_eve
            eve[k] += w
            # PNS: keep one of two, forward everything from larger pulses
            forwarded = 1 if k == 2 else k
            for arrived, p_arr in _patterns(forwarded, psi_eb):
                if arrived == 0:
                    continue
                op[k] += w * p_arr
                for detected, p_det in _patterns(arrived, eta):
                    if detected == arrived:
                        pd[k] += w * p_arr * p_det
    return {"eve": eve, "op": op, "pd": pd}


def psi(alpha: float, length: float, p_pl: float) -> float:
    return 10 ** (-alpha * length / 10) * (1 - p_pl)


def baseline_oracle(lambda_d: float = 0.2) -> dict:
    """Brute-force expected counts for the 50 km baseline."""
    ps = psi(0.2, 25.0, 0.5)
    sig = slot_outcomes(0.5, ps, ps, 0.3)
    dec = slot_outcomes(lambda_d, ps, ps, 0.3)
    m_s, m_d, m_v = 1_000_000, 500_000, 10_000
    n_pd_s = m_s * sum(sig["pd"].values())
    y_s = sum(sig["op"].values())
    y_d = sum(dec["op"].values())
    return {
        "psi": ps,
        "signal": sig,
        "decoy": dec,
        "n_op_s": m_s * y_s,
        "n_pd_s": n_pd_s,
        "R_k": n_pd_s * 0.8 * 0.8 / (m_s + m_d + m_v),
        "rho_y_sd": y_s / y_d,
        "rho_e_sd": m_s * sig["eve"][2] / (m_d * dec["eve"][2]),
    }
