#!/usr/bin/env python3
"""One simulated tomography experiment, end to end.

Prepares a partially decohered qubit through the spectral model, measures it
with the octahedron protocol, checks the adequacy of the redundant counts,
reconstructs by pseudo-inversion and by maximum likelihood, and compares
both with the truth and with the predicted loss scale.
"""

import numpy as np

import tomoq


def main():
    # a pure |H> qubit decoheres behind a thick plate at 45 degrees
    delta0 = np.pi * 5e6 * 0.009 / 1550.0
    model = tomoq.SpectralModel(1550.0, 9.0, plates=((delta0, np.pi / 4),))
    truth = tomoq.decohered_qubit(model, [1.0, 0.0])
    print(f"true state: purity {tomoq.purity(truth):.4f}, "
          f"entropy {tomoq.entropy(truth):.4f} bits")

    protocol = tomoq.polyhedron_protocol("octahedron", 1)
    n = 20000
    protocol = tomoq.normalize_exposures(protocol, truth, n)
    counts = tomoq.sample_counts(protocol, truth, n, seed=7, _normalized=True)
    print(f"counts over {protocol.m} rows: {counts.tolist()}  (total {counts.sum()})")

    analysis = tomoq.analyze(tomoq.measurement_matrix(protocol))
    print(f"protocol rank {analysis.rank}/{protocol.dim**2}, "
          f"K = {analysis.condition_number:.4f}")

    adequacy = tomoq.adequacy_test(analysis, counts)
    print(f"adequacy: statistic {adequacy.statistic:.2f} over {adequacy.null_dim} "
          f"redundant coordinates, p = {adequacy.p_value:.3f} -> "
          f"{'adequate' if adequacy.adequate else 'rejected'}")

    pinv = tomoq.pseudo_inverse_reconstruct(analysis, counts)
    print(f"\npseudo-inverse: purity bound {pinv.purity_bound / (counts.sum() / n)**2:.4f}, "
          f"fidelity of projected state {tomoq.fidelity(truth, pinv.rho_projected):.6f}")

    result = tomoq.ml_reconstruct(protocol, counts, analysis=analysis)
    loss = 1.0 - tomoq.fidelity(truth, result.estimate)
    print(f"maximum likelihood: {result.iterations} iterations, "
          f"converged = {result.converged}")
    print(f"  fidelity {1 - loss:.6f}  (z = {tomoq.nines(loss):.2f} nines)")

    theory = tomoq.loss_model(protocol, truth, n)
    band = tomoq.quantile_band(theory)
    print(f"  predicted mean loss {theory.d.sum():.2e}; this trial {loss:.2e}")
    print(f"  98% fidelity band [{band.f_lo:.6f}, {band.f_hi:.6f}] "
          f"{'contains' if band.f_lo <= 1 - loss <= band.f_hi else 'misses'} the trial")


if __name__ == "__main__":
    main()
