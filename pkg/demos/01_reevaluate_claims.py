"""
Reading a trace-distance claim as a guessing statement
=======================================================

A key of ``n`` bits that is ``ε_sec``-close to ideal only guarantees, via
Markov's inequality, that Eve's whole-key guessing probability is below
``ε_sec**(1/3)`` except with small probability. Here we tabulate what that
means for a few claimed parameter sets.
"""

from qkdcrit import logdomain
from qkdcrit.keyrate import reevaluation_table

# (n, epsilon_sec, leak_EC, auth_bits); strings keep tiny values exact
claims = [
    (10_000, "1e-6", 0, 0),
    (10_000, "1e-20", 2000, 100),
    (100_000, "1e-50", 0, 0),
]
rows = reevaluation_table(claims)

print(f"{'n':>7} {'eps_sec':>9} {'P_guess <=':>11} {'2^-n':>12} {'l_uniform':>10} {'R_F':>8}")
for r in rows:
    d = r.display()
    print(f"{r.n:>7} {d['eps_sec']:>9} {d['p_suc_bound']:>11} {d['ideal']:>12} {r.l_uniform:>10} {r.R_F:>8.4f}")

# The gap between the two middle columns is the point: a uniform 10^4-bit key
# would be guessed with probability ~10^-3010, the claim certifies ~10^-7.
r = rows[1]
print()
print(f"gap for n={r.n}: {r.p_suc_bound_log10 - r.ideal_log10:.1f} decades")
print(f"only {r.l_uniform} bits are as hard to guess as a uniform key;"
      f" after {r.leak_EC:.0f} leaked and {r.auth_bits:.0f} authentication bits nothing is left")
for note in r.footnotes():
    print("note:", note)

# Log-domain helpers parse values far below the float range.
print()
print("log10(1e-5000) =", logdomain.log10_of("1e-5000"))
