"""Independent reference computations used only by the test-suite.

Nothing in here imports the package under test.
"""
import numpy as np


def segment_distance(z, a=0.0, b=1.0):
    z = np.asarray(z, dtype=complex)
    ab = b - a
    s = np.clip(((z - a) * np.conj(ab)).real / abs(ab) ** 2, 0.0, 1.0)
    foot = a + s * ab
    return np.abs(z - foot), foot


def wos_green_infinity(z0, dist_and_foot, t, center, r_far, n_walks=200_000,
                       eps=1e-6, seed=0, max_steps=10_000):
    """Walk-on-spheres estimate of G(z0, inf) for {d > t}.

    Uses G(z, inf) = log|z - c| - E_z[log|B_tau - c|]; the walker is moved
    back onto the circle |w - c| = r_far with the exact exterior harmonic
    measure whenever it leaves that circle.
    Returns (mean, standard error).
    """
    rng = np.random.default_rng(seed)
    z = np.full(n_walks, complex(z0))
    alive = np.ones(n_walks, dtype=bool)
    end = np.empty(n_walks, dtype=complex)
    for _ in range(max_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        w = z[idx]
        far = np.abs(w - center) > r_far
        if far.any():
            a = (w[far] - center) / r_far
            a_star = 1.0 / np.conj(a)
            u = np.exp(2j * np.pi * rng.random(a.size))
            w[far] = center + r_far * (u + a_star) / (1 + np.conj(a_star) * u)
        d, foot = dist_and_foot(w)
        step = d - t
        done = step < eps
        if done.any():
            # project onto the level set d = t
            dirs = (w[done] - foot[done]) / np.maximum(d[done], 1e-300)
            end[idx[done]] = foot[done] + t * dirs
            alive[idx[done]] = False
        move = ~done
        w[move] += step[move] * np.exp(2j * np.pi * rng.random(move.sum()))
        z[idx] = w
    if alive.any():
        raise RuntimeError("walk-on-spheres did not terminate")
    x = np.log(abs(complex(z0) - center)) - np.log(np.abs(end - center))
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(n_walks))


if __name__ == "__main__":
    for seed in (0, 1):
        m, se = wos_green_infinity(2.0, segment_distance, 0.2, 0.5, 3.0, seed=seed)
        print(f"segment [0,1], t=0.2, z=2: G = {m:.6f} +- {se:.6f}")
