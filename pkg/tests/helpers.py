"""Random admissible trial profiles shared by the functional and acceptance tests."""
import numpy as np

from cknlab.profiles import InadmissibleProfile, make_trial


def random_trial(rng):
    kind = rng.choice(["gen-exp", "rational", "bump"])
    if kind == "gen-exp":
        return make_trial("gen-exp", a=rng.uniform(-0.9, 3.0), s=rng.uniform(0.2, 3.0),
                          **{"lambda": rng.uniform(0.3, 3.0)})
    if kind == "rational":
        return make_trial("rational", a=rng.uniform(-0.5, 3.0), s=rng.uniform(0.5, 4.0), m=rng.uniform(0.5, 5.0))
    r0 = rng.uniform(0.2, 2.0)
    return make_trial("bump", r0=r0, r1=r0 + rng.uniform(0.3, 3.0), amp=rng.uniform(0.5, 2.0))


def admissible_reports(evaluate, n, seed, max_draws=5000):
    """Evaluate ``evaluate(profile)`` on ``n`` random profiles it accepts.

    Draws rejected by the exponent-arithmetic admissibility check are
    skipped; any other failure propagates.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(max_draws):
        prof = random_trial(rng)
        try:
            out.append((prof, evaluate(prof)))
        except InadmissibleProfile:
            continue
        if len(out) == n:
            return out
    raise RuntimeError(f"only {len(out)} admissible profiles in {max_draws} draws")
