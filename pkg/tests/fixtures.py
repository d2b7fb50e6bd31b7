"""Shared test fixtures.

The recovery benchmark: a rise-fall input sweep (with a short rest at the
true flag point, mimicking how staged lab profiles pause at direction
changes) driving a two-bank descend-flag model with linear envelopes.
Generating parameters are drawn per seed from documented uniform ranges
chosen to give robot-scale angle ranges (roughly 25..60 deg) and a clearly
two-staged descending branch.
"""

import numpy as np

from hystfit import Trajectory, build_model, gen_synthetic
from hystfit.operators import GpiModel

SWEEP_N = 5000
SWEEP_DT = 1e-3
SWEEP_PEAK = 10.0
SWEEP_FLAG = 6.0  # true descending flag point of every generating model


def sweep_input(n=SWEEP_N, dt=SWEEP_DT, peak=SWEEP_PEAK, flag=SWEEP_FLAG):
    """Rise 0 -> peak, fall to the flag level, rest briefly, fall to 0."""
    n_up = n // 2
    n_down1 = n // 5
    n_hold = n // 50
    n_down2 = n - n_up - n_down1 - n_hold
    v = np.concatenate(
        [
            np.linspace(0.0, peak, n_up, endpoint=False),
            np.linspace(peak, flag, n_down1, endpoint=False),
            np.full(n_hold, flag),
            np.linspace(flag, 0.0, n_down2),
        ]
    )
    return Trajectory(t=dt * np.arange(n), v=v)


def recovery_params(seed):
    """Generating parameter vector for one benchmark seed (egpi layout)."""
    rng = np.random.default_rng(1000 + seed)
    a1 = 3.0 + rng.uniform(-0.4, 0.4)
    a2 = rng.uniform(0.0, 1.5)
    a3 = a1 * rng.uniform(0.95, 1.1)
    a4 = a2 + rng.uniform(3.5, 5.5)
    a5 = a1 * rng.uniform(0.55, 0.8)
    a6 = rng.uniform(-1.0, 1.0)
    lam = rng.uniform(0.04, 0.09)
    sigma = rng.uniform(0.05, 0.3)
    r1 = rng.uniform(0.1, 0.4)
    rn = rng.uniform(1.5, 3.0)
    kappa = rng.uniform(2.0, 4.0)
    return np.array([a1, a2, a3, a4, a5, a6, lam, sigma, r1, rn, kappa])


def recovery_dataset(seed, noise_std=0.1, n=SWEEP_N):
    """(noisy trajectory, clean output, true params) for one seed."""
    base = sweep_input(n=n)
    params = recovery_params(seed)
    clean_model = build_model(params, "egpi", SWEEP_FLAG)
    clean = gen_synthetic(clean_model, base, noise_std=0.0).theta
    noisy_model = build_model(params, "egpi", SWEEP_FLAG)
    noisy = gen_synthetic(noisy_model, base, noise_std=noise_std, seed=seed)
    return noisy, clean, params


def oracle_kwargs(model: GpiModel) -> dict:
    """run_gpi keyword values for one bank (plain values only)."""
    d = model.density
    return {
        "asc_doc": model.asc_env.to_dict(),
        "desc_doc": model.desc_env.to_dict(),
        "ka": model.kappa_asc,
        "kd": model.kappa_desc,
        "lam": d.lam,
        "sigma": d.sigma,
        "r1": d.r1,
        "rn": d.rn,
        "n": d.n,
    }


def random_envelope(rng, kind=None, shift=0.0):
    """Random in-bounds envelope; shift raises the whole curve."""
    from hystfit import LinearEnvelope, TanhEnvelope

    if kind is None:
        kind = "linear" if rng.random() < 0.5 else "tanh"
    if kind == "linear":
        return LinearEnvelope(a=rng.uniform(0.3, 3.0), b=rng.uniform(-2.0, 2.0) + shift)
    return TanhEnvelope(
        c=rng.uniform(2.0, 12.0),
        d=rng.uniform(0.05, 0.5),
        e=rng.uniform(-1.0, 1.0),
        f=rng.uniform(-1.0, 1.0) + shift,
    )


def random_density(rng):
    from hystfit import DensitySpec

    r1 = rng.uniform(0.05, 2.0)
    return DensitySpec(
        lam=rng.uniform(0.01, 1.0),
        sigma=rng.uniform(0.0, 1.0),
        r1=r1,
        rn=r1 + rng.uniform(0.0, 8.0),
        n=int(rng.integers(1, 35)),
    )


def random_gpi(rng):
    from hystfit import GpiModel

    return GpiModel(
        density=random_density(rng),
        asc_env=random_envelope(rng),
        desc_env=random_envelope(rng, shift=2.0),
        kappa_asc=rng.uniform(0.5, 8.0),
        kappa_desc=rng.uniform(0.5, 8.0),
    )


def random_input(rng, max_segments=6, max_len=40):
    """Piecewise-monotone input: random ramps with occasional holds."""
    segs = []
    cur = rng.uniform(-3.0, 3.0)
    for _ in range(int(rng.integers(2, max_segments + 1))):
        if rng.random() < 0.15:
            segs.append(np.full(int(rng.integers(2, 8)), cur))
            continue
        nxt = rng.uniform(-6.0, 6.0)
        npts = int(rng.integers(3, max_len))
        segs.append(np.linspace(cur, nxt, npts, endpoint=False))
        cur = nxt
    v = np.concatenate(segs + [np.array([cur])])
    t = 0.01 * np.arange(v.size)
    return t, v
