#!/usr/bin/env python3
"""Postselected weak measurements do not define a unique number.

Couple a two-level meter to a spin so weakly that the spin state is
essentially untouched, read the meter, keep only the runs whose final
spin measurement lands in f, and divide the conditional meter average by
the coupling.  The limit of that procedure is usually quoted as
Re(<f, A s> / <f, s>).

But the protocol is not unique: any unitary V that fixes the prepared
state can be slipped in before the readout.  It changes nothing about
the weakness of the measurement or the unconditional average -- and yet
the postselected limit becomes Re(<f, V A s> / <f, s>).  Sweeping V over
the one-parameter family diag(1, eta) traces out every value in [-1, 1]
for the same state, observable and postselection.
"""

import numpy as np

from weaklab import (
    StateVector,
    conditional_meter_expectation,
    eta_phase_unitary,
    hermitian_operator,
    normalized_meter_expectation,
    qubit_protocol,
    weak_value_finite,
)

spin_flip = hermitian_operator([[0, 1], [1, 0]])
prepared = StateVector([1.0, 0.0])
final = StateVector([1.0, 1.0]).unit()

print(f"{'eta':>22} {'limit':>8} {'cond. mean/eps':>15} {'uncond. mean/eps':>17}")
for angle in np.linspace(0.0, np.pi, 9):
    eta = np.exp(1j * angle)
    coupling = eta_phase_unitary(prepared, eta)
    protocol = qubit_protocol(prepared, spin_flip, 1e-4, coupling_unitary=coupling)
    limit = weak_value_finite(prepared, spin_flip, coupling, final)
    conditional = conditional_meter_expectation(protocol, final) / 1e-4
    unconditional = normalized_meter_expectation(protocol)
    print(f"exp({angle:5.3f}i) = {eta.real:+.3f}{eta.imag:+.3f}i "
          f"{limit:+.4f} {conditional:+15.6f} {unconditional:+17.6f}")

print()
print("The conditional column follows Re(eta); the unconditional column is")
print("pinned at <s, A s> = 0 for every member of the family.  All of these")
print("protocols 'weakly measure' the same observable on the same state.")
