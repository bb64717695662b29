"""
Bit errors, phase errors and the Koashi bound
==============================================

A one-bit key in which Bob's bit flips with probability ``q`` and Eve's
memory reveals Alice's bit through coherence controlled by a phase-error
rate ``e``. The distance from an ideal correlated key stays below
``2 η_Z + 2 √η_X`` with ``η_Z = q`` and ``η_X = e``.
"""

import numpy as np

from qkdcrit import criteria, states

print("   e      q     eta_Z   eta_X   distance   bound")
for t in np.linspace(0.0, 1.0, 6):
    fam = states.phase_error_family(0.5 * t, 0.2 * t)
    ez = criteria.koashi_eta_z(criteria.joint_table(fam.state_ab))
    ex = criteria.koashi_eta_x(fam.sigma_A, fam.ideal)
    kd = criteria.koashi_key_distance(fam.state_ab)
    bound = criteria.koashi_key_bound(ez.conventional, ex)
    print(f"{fam.e:5.2f}  {fam.q:5.2f}  {ez.conventional:6.3f}  {ex:6.3f}  {kd.full:9.4f}  {bound:6.3f}")

# Dividing the joint table mass by M as well gives a much looser eta_Z.
fam = states.phase_error_family(0.1, 0.05)
ez = criteria.koashi_eta_z(criteria.joint_table(fam.state_ab))
print()
print(f"eta_Z readings at e=0.1, q=0.05: conventional {ez.conventional:.3f}, divided by M {ez.literal:.3f}")
