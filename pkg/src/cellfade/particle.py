"""Radial solid diffusion in spherical particles.

Finite-volume shells on a fixed mesh, backward-Euler in time. The propagator
(I - dt*M)^-1 is cached per timestep size, so advancing a particle is one
small matrix-vector product; that is what makes multi-month aging runs cheap.

Flux sign: surface molar flux j > 0 removes lithium from the particle
(delithiation). Concentrations are never clamped; a step that would leave
[0, c_smax] raises SaturationError.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SaturationError


class SphereFV:
    """One spherical particle discretized into n_shells finite volumes."""

    def __init__(self, r_p, D, c_smax, n_shells, name):
        self.r_p = float(r_p)
        self.D = float(D)
        self.c_smax = float(c_smax)
        self.n = int(n_shells)
        self.name = name
        self.dr = self.r_p / self.n
        faces = np.linspace(0.0, self.r_p, self.n + 1)
        self.volumes = 4.0 / 3.0 * np.pi * (faces[1:] ** 3 - faces[:-1] ** 3)
        self.total_volume = float(self.volumes.sum())
        area_int = 4.0 * np.pi * faces[1:-1] ** 2   # internal faces
        self.area_surf = 4.0 * np.pi * self.r_p ** 2

        # dc/dt = M c - j * e ; M rows sum to zero (flux telescoping)
        n = self.n
        M = np.zeros((n, n))
        w = self.D * area_int / self.dr
        for i in range(n - 1):
            M[i, i] -= w[i] / self.volumes[i]
            M[i, i + 1] += w[i] / self.volumes[i]
            M[i + 1, i + 1] -= w[i] / self.volumes[i + 1]
            M[i + 1, i] += w[i] / self.volumes[i + 1]
        self._M = M
        self._e = np.zeros(n)
        self._e[-1] = self.area_surf / self.volumes[-1]
        self._props = {}

    def _propagator(self, dt):
        key = dt
        got = self._props.get(key)
        if got is None:
            P = np.linalg.inv(np.eye(self.n) - dt * self._M)
            got = (P, P @ self._e)
            if len(self._props) > 64:
                self._props.clear()
            self._props[key] = got
        return got

    def step(self, c, j, dt):
        """Advance one backward-Euler step under surface molar flux j."""
        P, Pe = self._propagator(dt)
        c_new = P @ c - (dt * j) * Pe
        lo = c_new.min()
        hi = c_new.max()
        if lo < 0.0 or hi > self.c_smax:
            raise SaturationError(
                f"{self.name} particle concentration left [0, {self.c_smax:g}]: "
                f"range [{lo:.6g}, {hi:.6g}] under flux {j:.6g}")
        return c_new

    def c_ss(self, c, j):
        """Surface concentration from the outermost shell and the flux BC."""
        return float(c[-1]) - 0.5 * self.dr * j / self.D

    def c_avg(self, c):
        return float(self.volumes @ c) / self.total_volume

    def moles(self, c):
        """Lithium content of one particle, mol."""
        return float(self.volumes @ c)

    def uniform(self, stoichiometry):
        return np.full(self.n, stoichiometry * self.c_smax)


@dataclass
class ParticleState:
    """Radial concentration profiles for the electrode pair, mol/m^3."""
    c_pos: np.ndarray
    c_neg: np.ndarray

    def copy(self):
        return ParticleState(self.c_pos.copy(), self.c_neg.copy())


class ParticlePair:
    """The two representative particles of a cell."""

    def __init__(self, params):
        self.pos = SphereFV(params.r_p_pos, params.D_s_pos, params.c_smax_pos,
                            params.n_shells, "positive")
        self.neg = SphereFV(params.r_p_neg, params.D_s_neg, params.c_smax_neg,
                            params.n_shells, "negative")

    def at_stoichiometry(self, x, y):
        """Equilibrated state: uniform profiles at (x negative, y positive)."""
        return ParticleState(self.pos.uniform(y), self.neg.uniform(x))


def step_particle_diffusion(pair, state, j_pos, j_neg, dt):
    """Advance both particles one step; returns a new ParticleState."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return ParticleState(
        pair.pos.step(state.c_pos, j_pos, dt),
        pair.neg.step(state.c_neg, j_neg, dt),
    )
