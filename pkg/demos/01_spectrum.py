# %% [markdown]
# # Bound-state energies
#
# The energy equation comes from the first termination condition of the confluent
# Heun series. Its square root `sqrt(D_e (E - m - C_p))` is negative-argument for every
# tabulated energy, so the result depends on how the root is taken. This walk-through
# solves all 16 states under each convention and compares them with the reference values.

# %%
from dirac_morse.radial import TABLE1_PARAMS, BranchConfig
from dirac_morse.spectrum import TABLE1_ENERGIES, residual_matrix, spectrum_table, table1_states

p = TABLE1_PARAMS
print(p)

# %%
for sqrt in ("as-printed", "magnitude", "signed-alternative"):
    for b2 in ("printed", "derived"):
        tab = spectrum_table(p, table1_states(), BranchConfig(sqrt_convention=sqrt, b2_variant=b2),
                             TABLE1_ENERGIES)
        solved = [r for r in tab.results if r.ok]
        dev = max((abs(r.deviation) for r in solved), default=float("nan"))
        print(f"{sqrt:>18} / {b2:<7}: {len(solved):2d}/16 solved, max |E - E_ref| = {dev:.3g}")

# %% [markdown]
# The residual at each reference energy shows why nothing matches: `E - m - C_p < 0`
# everywhere, so the principal root is complex and the real-valued conventions are
# nowhere near zero.

# %%
rows = residual_matrix(p, TABLE1_ENERGIES)
for row in rows[:4]:
    res = row["residuals"]
    print(row["N"], row["k"], f"eps1={row['eps1']:.4f}",
          {k: v for k, v in res.items() if "derived" in k})

# %%
tab = spectrum_table(p, table1_states(), BranchConfig(sqrt_convention="signed-alternative"))
for N, pts in sorted(tab.plot_data().items()):
    print(N, [(k, round(E, 6)) for k, E in pts])
