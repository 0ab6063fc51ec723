"""Finite-dimensional geometric quantum mechanics, the cross-check model.

The complex state space becomes a real symplectic space by splitting the
Hermitian inner product into metric and symplectic parts.  Schrodinger
evolution is the Hamiltonian flow of the energy expectation, eigenvectors
are the critical points of expectation functions on the unit sphere modulo
phase, and the symplectic bracket of two expectation functions is the
expectation of the scaled commutator (proportionality constant measured:
exactly 1 under the conventions used here).
"""

import numpy as np

from bsmoduli import (
    HermitianObservable,
    StateVector,
    bracket_commutator_check,
    decompose_inner,
    exact_flow,
    expectation,
    measure_kappa,
    projective_critical_check,
    schrodinger_flow_rk4,
)

rng = np.random.default_rng(1)

# metric / symplectic split of the inner product
e1 = StateVector([1.0, 0.0])
rotated = StateVector([1.0j, 0.0])
print("G, Omega of (e1, e1):  ", decompose_inner(e1, e1))
print("G, Omega of (e1, i*e1):", decompose_inner(e1, rotated))

# Schrodinger flow vs the matrix exponential
raw = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
ham = HermitianObservable((raw + raw.conj().T) / 2)
vec = rng.standard_normal(4) + 1j * rng.standard_normal(4)
psi = StateVector(vec / np.linalg.norm(vec))
rk4 = schrodinger_flow_rk4(ham, psi, 1.0, 1e-3)
exact = exact_flow(ham, psi, 1.0)
print("\nRK4 vs matrix exponential (t=1, h=1e-3):",
      np.max(np.abs(rk4.amplitudes - exact.amplitudes)))
print("norm drift:  ", abs(rk4.norm() - 1.0))
print("energy drift:", abs(expectation(ham, rk4) - expectation(ham, psi)))

# eigenvectors are critical points of the expectation on the sphere
vals, vecs = np.linalg.eigh(ham.matrix)
print("\neigenpair criticality (residual, value error):")
for k in range(4):
    res, verr = projective_critical_check(ham, vecs[:, k], vals[k])
    print(f"  level {k}: ({res:.2e}, {verr:.2e})")

# bracket <-> commutator, with the measured constant
sx = HermitianObservable([[0, 1], [1, 0]])
sy = HermitianObservable([[0, -1j], [1j, 0]])
spin = rng.standard_normal(2) + 1j * rng.standard_normal(2)
state = StateVector(spin / np.linalg.norm(spin))
lhs, rhs = bracket_commutator_check(sx, sy, state)
print("\nPauli pair: symplectic bracket =", lhs, ", commutator route =", rhs)
kappa, dev = measure_kappa(n=4, instances=100, seed=0)
print("measured kappa over 100 random instances:", kappa, "+/-", dev)
