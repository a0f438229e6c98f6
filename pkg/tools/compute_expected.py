#!/usr/bin/env python3
"""Independent high-precision evaluation of the documented scoring examples.

Everything here is computed with 50-digit mpmath arithmetic, straight from
the formulas, with no imports from the package under test.  Test modules
load this file and compare library outputs against these values at 1e-9.
"""

import mpmath as mp

mp.mp.dps = 50


def sigmoid(x):
    return 1 / (1 + mp.e ** (-mp.mpf(x)))


def soft_order(order_value, alpha):
    return 1 / (1 + mp.e ** (mp.mpf(alpha) * mp.mpf(order_value)))


def logsumexp(values):
    return mp.log(mp.fsum(mp.e ** mp.mpf(v) for v in values))


def expected_values():
    alpha = mp.mpf(4)
    tau = mp.mpf(2)

    risky = soft_order(-1, alpha)       # order -1 activation
    safe = soft_order(+1, alpha)        # order +1 activation

    # one candidate pair, dependency set, risky order
    single_raw = logsumexp([risky])
    single_centered = single_raw - mp.log(1)

    # two candidate pairs: one risky, one safely ordered
    pair_raw = logsumexp([risky, safe])
    pair_centered = pair_raw - mp.log(2)

    kl_terms = [
        mp.mpf("0.7") * mp.log(mp.mpf("0.7") / mp.mpf("0.25")),
        mp.mpf("0.1") * mp.log(mp.mpf("0.1") / mp.mpf("0.25")),
        mp.mpf("0.1") * mp.log(mp.mpf("0.1") / mp.mpf("0.25")),
        mp.mpf("0.1") * mp.log(mp.mpf("0.1") / mp.mpf("0.25")),
    ]
    kl_reverse_terms = [
        mp.mpf("0.25") * mp.log(mp.mpf("0.25") / q)
        for q in (mp.mpf("0.7"), mp.mpf("0.1"), mp.mpf("0.1"), mp.mpf("0.1"))
    ]

    return {
        "soft_order_minus1_alpha4": risky,
        "soft_order_plus1_alpha4": safe,
        "single_pair_raw_f": single_raw,
        "single_pair_centered_f": single_centered,
        "two_pair_raw_f": pair_raw,
        "two_pair_centered_f": pair_centered,
        "predict_zero_signal": sigmoid(-tau),
        "predict_single_pair": sigmoid(alpha * single_centered - tau),
        "predict_two_pair": sigmoid(alpha * pair_centered - tau),
        "kl_skewed_vs_uniform": mp.fsum(kl_terms),
        "kl_uniform_vs_skewed": mp.fsum(kl_reverse_terms),
        "fuse_logit_one": sigmoid(1),
    }


def as_floats():
    return {k: float(v) for k, v in expected_values().items()}


if __name__ == "__main__":
    for key, val in expected_values().items():
        print(f"{key} = {mp.nstr(val, 20)}")
