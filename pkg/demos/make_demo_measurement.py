"""Regenerate the frozen measurement block in ambiguity_demo.yaml.

Ages the default cell 160 cycles on the demo's own cycling steps, then
prints the field-observable aggregate vector in YAML form. Paste the
block into src/cellfade/data/ambiguity_demo.yaml whenever the cell
parameters change, so the packaged demo measurement stays consistent
with the model that is asked to explain it.
"""
import time
from importlib import resources

import cellfade as cf
from cellfade import io as cio
from cellfade.measurement import forward_measure

MEAS_CYCLE = 160          # mid-life on the default cell, about 11% LLI
DT, DT_REST = 60.0, 300.0

t0 = time.time()
params, deg = cf.default_cell()
c1 = cf.reference_capacity(params)
y_frozen, _, camp, _ = cio.load_ambiguity_config(
    resources.files("cellfade.data") / "ambiguity_demo.yaml", c1)

cell = cf.Cell(params, deg)
pre = cf.Campaign(cycle_protocol=camp.cycle_protocol, rpt_every=0,
                  eol_capacity_fraction=0.01, max_cycles=MEAS_CYCLE)
traj, _, _ = cf.run_campaign(cell, pre, dt=DT, dt_rest=DT_REST,
                             keep_series=False)
d = cell.degradation
cap = traj.cycles[-1].capacity_Ah
print("aged %d cycles: capacity %.4f Ah (%.1f%% fade), d_sei %.1f nm, "
      "d_pl %.2f nm, LLI %.4f"
      % (MEAS_CYCLE, cap, 100 * (1 - cap / c1),
         d.delta_sei * 1e9, d.delta_pl * 1e9, d.LLI))

y = forward_measure(params, deg, d, cell.n_li0)
print("\npaste into src/cellfade/data/ambiguity_demo.yaml:\n")
print("measurement:")
print("  C_p: %.6g" % y.C_p)
print("  C_n: %.6g" % y.C_n)
print("  LLI: %.6g" % y.LLI)
print("  R_s: %.6g" % y.R_s)

print("\ncurrently packaged:      C_p %.6g  C_n %.6g  LLI %.6g  R_s %.6g"
      % (y_frozen.C_p, y_frozen.C_n, y_frozen.LLI, y_frozen.R_s))
print("wall %.1f s" % (time.time() - t0))
