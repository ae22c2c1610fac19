"""The coupled cell: two particles, film growth, inventory accounting.

Cell.step applies one applied-current timestep: kinetics are evaluated at
the incoming surface state, the side-reaction current is split off, the
particles advance under the remaining intercalation current, and the
degradation state integrates alongside. Fatigue capacity loss is applied
from outside at cycle boundaries (see protocol.run_campaign).
"""

from . import electrochem as ec
from .degradation import (DegradationState, StepIncrements, StressExtrema,
                          hydrostatic_stress, lam_cycle_update,
                          step_degradation)
from .errors import CellDeadError
from .measurement import r_film
from .particle import ParticlePair, step_particle_diffusion


class Cell:
    def __init__(self, params, deg_params, degradation=None, n_li0=None,
                 particles=None):
        self.params = params
        self.deg_params = deg_params
        self.pair = ParticlePair(params)
        self.n_li0 = ec.pristine_inventory(params) if n_li0 is None else n_li0
        if degradation is None:
            degradation = DegradationState(0.0, 0.0, params.C_p_nom,
                                           params.C_n_nom, 0.0)
        self.degradation = degradation
        self.extrema = StressExtrema()
        self.lam_lithium = 0.0   # mol booked against material loss, audit trail
        self.freeze_degradation = False   # RPT probes measure without aging
        if particles is None:
            w = self.esoh()
            particles = self.pair.at_stoichiometry(w.x_100, w.y_100)
        self.particles = particles

    # --- derived views ---

    @property
    def n_li(self):
        """Cyclable lithium now, mol."""
        return self.n_li0 * (1.0 - self.degradation.LLI)

    def esoh(self):
        d = self.degradation
        return ec.solve_window(self.params, d.C_p, d.C_n, self.n_li)

    def mean_stoichiometry(self):
        x = self.pair.neg.c_avg(self.particles.c_neg) / self.params.c_smax_neg
        y = self.pair.pos.c_avg(self.particles.c_pos) / self.params.c_smax_pos
        return x, y

    def particle_lithium(self):
        """Lithium held in the particles, mol, at live volume fractions."""
        p = self.params
        d = self.degradation
        x, y = self.mean_stoichiometry()
        return 3600.0 / p.F * (x * d.C_n + y * d.C_p)

    def r_film_cell(self):
        return r_film(self.params, self.deg_params, self.degradation)[1]

    def open_circuit_voltage(self):
        x, y = self.mean_stoichiometry()
        return self.params.ocp_pos(y) - self.params.ocp_neg(x)

    # --- state placement ---

    def equilibrate_at(self, x=None, soc=None):
        """Uniform profiles at negative stoichiometry x (or window SOC),
        with the positive side fixed by lithium conservation."""
        w = self.esoh()
        if x is None:
            if soc is None:
                raise ValueError("give either x or soc")
            x = w.x_0 + soc * w.C / w.C_n
        N_Ah = self.n_li * self.params.F / 3600.0
        y = (N_Ah - x * w.C_n) / w.C_p
        self.particles = self.pair.at_stoichiometry(x, y)
        return self

    def clone(self, degradation=None):
        """Independent cell with the same parameters, fresh accumulators."""
        d = (self.degradation if degradation is None else degradation).copy()
        return Cell(self.params, self.deg_params, degradation=d,
                    n_li0=self.n_li0)

    def get_state(self):
        """Snapshot for rollback during adaptive stepping."""
        return (self.particles.copy(), self.degradation.copy(),
                StressExtrema(**vars(self.extrema)), self.lam_lithium)

    def set_state(self, snap):
        self.particles, self.degradation, self.extrema, self.lam_lithium = (
            snap[0].copy(), snap[1].copy(),
            StressExtrema(**vars(snap[2])), snap[3])

    # --- stepping ---

    def _advance(self, I, dt):
        p = self.params
        d = self.degradation
        neg, pos = self.pair.neg, self.pair.pos
        area_n = p.active_area("neg", d.C_n)
        area_p = p.active_area("pos", d.C_p)

        j_neg0 = I / (p.F * area_n)
        c_ss_n = neg.c_ss(self.particles.c_neg, j_neg0)
        if self.freeze_degradation:
            deg_new = d
            inc = StepIncrements(0.0, 0.0, 0.0, 0.0, 0.0)
        else:
            eta_neg = ec.intercalation_overpotential(p, "neg", I, c_ss_n, d.C_n)
            u_neg = p.ocp_neg(c_ss_n / p.c_smax_neg)
            c_avg_n = neg.c_avg(self.particles.c_neg)
            x_bar, y_bar = self.mean_stoichiometry()
            deg_new, inc = step_degradation(
                p, self.deg_params, d, eta_neg, u_neg, c_ss_n, c_avg_n,
                x_bar, y_bar, self.n_li0, dt)

        # side reactions take their share of the negative-electrode current
        j_neg = (I - inc.i_side) / (p.F * area_n)
        j_pos = -I / (p.F * area_p)
        parts = step_particle_diffusion(self.pair, self.particles,
                                        j_pos, j_neg, dt)

        c_ss_p2 = pos.c_ss(parts.c_pos, j_pos)
        c_ss_n2 = neg.c_ss(parts.c_neg, j_neg)
        v_t = ec.terminal_voltage(p, c_ss_p2, c_ss_n2, I,
                                  r_film(p, self.deg_params, deg_new)[1],
                                  deg_new.C_p, deg_new.C_n)
        return parts, deg_new, inc, c_ss_p2, c_ss_n2, v_t

    def voltage_after(self, I, dt):
        """Terminal voltage one trial step ahead, without committing."""
        return self._advance(I, dt)[5]

    def step(self, I, dt):
        """Advance the cell one timestep under applied current I (A).

        Returns a record dict; raises SaturationError if the step drives
        a particle out of range (caller may retry with smaller dt).
        """
        parts, deg_new, inc, c_ss_p, c_ss_n, v_t = self._advance(I, dt)
        self.particles = parts
        self.degradation = deg_new
        lam = self.deg_params.lam
        sig_p = hydrostatic_stress(lam, "pos", c_ss_p,
                                   self.pair.pos.c_avg(parts.c_pos), self.params)
        sig_n = hydrostatic_stress(lam, "neg", c_ss_n,
                                   self.pair.neg.c_avg(parts.c_neg), self.params)
        self.extrema.update(sig_p, sig_n)
        x, y = self.mean_stoichiometry()
        return {"I": I, "V": v_t, "x": x, "y": y,
                "i_side": inc.i_side, "dn_sei": inc.dn_sei, "dn_pl": inc.dn_pl,
                "sigma_pos": sig_p, "sigma_neg": sig_n}

    def apply_cycle_fatigue(self):
        """Close out a cycle: apply fatigue loss, book trapped lithium,
        reset the stress envelope."""
        p = self.params
        x, y = self.mean_stoichiometry()
        new, dC_p, dC_n = lam_cycle_update(self.degradation, self.extrema,
                                           self.deg_params.lam, p)
        dn = 3600.0 / p.F * (y * dC_p + x * dC_n)
        lli = new.LLI + dn / self.n_li0
        if lli >= 1.0:
            raise CellDeadError("lithium inventory exhausted")
        self.degradation = DegradationState(new.delta_sei, new.delta_pl,
                                            new.C_p, new.C_n, lli)
        self.lam_lithium += dn
        self.extrema = StressExtrema()
