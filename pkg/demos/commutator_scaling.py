"""How the smoothed frequency cutoff interacts with the potential.

The commutator of the multiplier with V, and its flow analogues, should
shrink like 1/J. Printed ratios are successive halvings of J.
"""

from sobolev_growth.flow import FlowConfig, commutator_norm, flow_commutator_norm, tail_persistence_norm
from sobolev_growth.potential import cosine_potential, three_mode_potential

Js = [16, 32, 64, 128]

for V in (cosine_potential(), three_mode_potential()):
    comm = [commutator_norm(V, J, 0.0) for J in Js]
    print(f"{V.label}: ||[V, Pi_J]|| =", [f"{c:.4e}" for c in comm])
    print("  ratios:", [round(a / b, 3) for a, b in zip(comm[:-1], comm[1:])])

# the flow versions need the propagator over [0, 4], so stay with the cosine
V = cosine_potential()
print(f"{'J':>5}{'tail-1':>12}{'flow comm':>12}")
for J in Js:
    cfg = FlowConfig(1e-3, 2 * J)
    tail = tail_persistence_norm(V, J, 1.0, 4.0, cfg) - 1
    flow = flow_commutator_norm(V, J, 1.0, 4.0, cfg)
    print(f"{J:>5}{tail:>12.4e}{flow:>12.4e}")
