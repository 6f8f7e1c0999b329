# %% [markdown]
# # Oracle checks
#
# Everything the library computes is checked against something computed a different
# way: the Heun series against direct ODE integration, the termination polynomial
# against a tridiagonal eigenproblem, and the centrifugal approximation against `1/r^2`.

# %%
from dirac_morse.config import load_config
from dirac_morse.verification import run_verification

report, extras = run_verification(load_config("table1_signed"))
for name, sec in report["sections"].items():
    print(f"{'PASS' if sec['pass'] else 'FAIL'} [{sec['kind']}] {name}")
print("hard checks pass:", report["hard_pass"])

# %%
scan = extras["approximation_scan"]
print("worst relative centrifugal error:", scan["rel_err"].max())
