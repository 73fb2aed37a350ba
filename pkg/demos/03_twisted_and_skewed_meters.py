#!/usr/bin/env python3
"""Two rigorous ways to reach any postselected value whatsoever.

Whenever the complex ratio w = <f, A s> / <f, s> has a nonzero imaginary
part, a meter modification that is invisible to position statistics
still steers the postselected limit:

* multiply the pointer wavefunction by the unimodular quadratic phase
  exp(i q^2 delta / 2) -- its position distribution is unchanged, but the
  limit becomes Re(w) + 2 * delta * Im(w);

* or use a two-level meter whose readout has off-diagonal rho + i/2 --
  the admissibility conditions fix only the imaginary part, and the limit
  is Re(w) + 2 * rho * Im(w).

Both knobs are swept below and land on the same straight line.
"""

from weaklab import (
    AAVScenario,
    StateVector,
    aav_conditional_expectation,
    aav_weak_value_analytic,
    complex_weak_value,
    default_grid,
    gaussian_meter,
    general_meter_protocol,
    general_meter_weak_value,
    hermitian_operator,
    phase_twist,
)

spin_flip = hermitian_operator([[0, 1], [1, 0]])
prepared = StateVector([1.0, 0.0])
final = StateVector([1.0, 0.3 - 0.4j]).unit()
w = complex_weak_value(prepared, spin_flip, final)
print(f"w = {w:.3f}  (Re {w.real:+.3f}, Im {w.imag:+.3f})\n")

grid = default_grid()
print(f"{'knob':>6} {'Re + 2*knob*Im':>15} {'twisted pointer (grid)':>23} {'skewed two-level':>17}")
for knob in (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5):
    line = w.real + 2 * knob * w.imag
    twisted = AAVScenario(
        prepared, spin_flip, final, phase_twist(gaussian_meter(1.0), knob), grid, 1e-3
    )
    grid_value = aav_conditional_expectation(twisted)
    skewed = general_meter_weak_value(general_meter_protocol(prepared, spin_flip, final, knob, 1e-3))
    analytic = aav_weak_value_analytic(prepared, spin_flip, None, final, knob)
    assert abs(analytic - line) < 1e-12 and abs(skewed - line) < 1e-12
    print(f"{knob:+6.1f} {line:15.4f} {grid_value:23.6f} {skewed:17.4f}")

print()
print("Nothing in the position record distinguishes these meters, yet the")
print("'measured' postselected value runs over the whole real line.")
