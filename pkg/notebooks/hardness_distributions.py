"""
How the engine fares on the hard distributions
==============================================

Sweeps over the no-slack and small-weight families, compared with the
expected-value bounds their analysis gives.
"""

from onlinepack.harness import expected_value_bound, sweep

# no slack: the optimum is always d, the engine keeps about log d items
for d in (4, 6, 8):
    rep = sweep("noslack", {"d": d}, 200, seed0=0, audit=False)
    s = rep.to_dict()
    bound = float(expected_value_bound("noslack", {"d": d}))
    print(f"d={d}: mean f(S) {s['mean_f_S_float']:.3f} +- {s['stderr_f_S']:.3f}, "
          f"bound {bound:.3f}, ratio {s['empirical_ratio_float']:.2f}")

# small weights: OPT = ell / eps_w, the engine keeps far fewer
params = {"ell": 3, "epsilon_w": "1/4"}
rep = sweep("smallweight", params, 100, seed0=0, audit=False, opt="witness")
s = rep.to_dict()
print("smallweight ell=3:", s["mean_f_S_float"], "vs bound",
      float(expected_value_bound("smallweight", params)), "opt", s["opt_values"])
