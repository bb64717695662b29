"""
Guessing probability against the trace distance
================================================

For any cq state the probability of guessing an ``n``-bit key is at most
``2^-n + d``, where ``d`` is the distance to an ideal key. We check this on
a perfect copy (tight), on the ``|0⟩ / |+⟩`` ensemble and on random states,
with the guessing probability certified from both sides.
"""

import warnings

import numpy as np

from qkdcrit import criteria, linalg, states
from qkdcrit.errors import NonConvergence
from qkdcrit.states import CqState

# Eve holds a perfect copy of a one-bit key: the bound is attained.
copy = CqState(("0", "1"), [0.5, 0.5], (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
a = criteria.check_guessing_bound(copy)
print(f"copy:      P_guess = {a.p_guess_upper:.6f}  2^-n + d = {a.distance_bound:.6f}  slack = {a.slack:.2e}")

# Non-orthogonal memories: the Helstrom value 1/2 + sqrt(2)/4.
ket0, plus = np.array([1, 0]), np.array([1, 1]) / np.sqrt(2)
zp = CqState(("0", "1"), [0.5, 0.5], (linalg.projector(ket0), linalg.projector(plus)))
a = criteria.check_guessing_bound(zp)
print(f"|0>/|+>:   P_guess = {a.p_guess_upper:.6f}  2^-n + d = {a.distance_bound:.6f}  slack = {a.slack:.2e}"
      f"  (Helstrom {criteria.helstrom(0.5, linalg.projector(ket0), linalg.projector(plus)):.6f})")

# Random three-bit keys with a 4-dimensional memory; the iterative solver
# reports a lower bound (a measurement) and an upper bound (a dual certificate).
# If the distance search hits its iteration cap the value is still an upper
# bound on the minimum and is flagged in the last column.
rng = np.random.default_rng(5)
print()
print(" trial  lower     upper     2^-n + d  slack      converged")
for k in range(5):
    st = states.random_cq_state(3, 4, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        a = criteria.check_guessing_bound(st)
    print(f"{k:>6}  {a.p_guess_lower:.6f}  {a.p_guess_upper:.6f}  {a.distance_bound:.6f}  {a.slack:.3e}  {a.d_converged}")

# The reduced-state shortcut only bounds the distance from above.
st = states.random_cq_state(2, 3, rng)
exact = criteria.trace_distance_to_ideal(st)
seed = criteria.trace_distance_to_ideal(st, mode=criteria.REDUCED_SEED)
print()
print(f"distance: minimised {exact.d:.6f} ({exact.iterations} iterations), at reduced state {seed.d:.6f}")
