"""Shannon-entropy uncertainty scores over predicted class probabilities.

Entropy is normalized by using the class count as the logarithm base, so the
score lives in [0, 1] for any number of classes: 0 for a one-hot prediction,
1 for the uniform distribution.
"""

from __future__ import annotations

import math
from typing import Sequence

from .ingest import EvaluationSet

# Floor applied inside the log only; keeps subnormal producer noise from
# emitting -inf while leaving the p_i multiplier untouched.
LOG_CLAMP = 1e-12


def shannon_entropy(probs: Sequence[float]) -> float:
    """Normalized Shannon entropy of a probability vector.

    Uses log base n (the class count) so the value is in [0, 1]; the
    0 * log(0) term is taken as 0 by continuity.
    """
    n = len(probs)
    if n < 2:
        raise ValueError("entropy needs at least 2 classes")
    log_n = math.log(n)
    acc = 0.0
    for p in probs:
        if p <= 0.0:
            continue
        acc -= p * math.log(max(p, LOG_CLAMP))
    value = acc / log_n
    # guard against rounding a hair past the closed interval
    if value < 0.0:
        return 0.0
    if value > 1.0:
        return 1.0
    return value


def annotate_set(evalset: EvaluationSet) -> EvaluationSet:
    """Return the set with every record's entropy populated.

    Record order and all other fields are unchanged; re-annotating is a
    no-op.
    """
    from dataclasses import replace

    return evalset.with_records(
        replace(rec, entropy=shannon_entropy(rec.probs)) for rec in evalset.records
    )
