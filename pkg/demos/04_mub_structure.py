"""Why MUB beamforming has low coherence: look at the Gram matrix.

Every pair of sensing columns is either orthogonal or correlated at exactly
sqrt(2^u / n_t), and each M-column block is unitary.
"""
import numpy as np

from celldisc import build_codebook, mub_family, sensing_matrix

fam = mub_family(8)
cross = np.abs(fam[1].conj().T @ fam[2])
print("8-dim family:", len(fam), "bases; cross overlaps all", np.unique(np.round(cross, 12)))

n_t, n_r, u = 16, 4, 1
psi = sensing_matrix(build_codebook("mubb", n_t, n_r, 2, u=u)).dense()
m = psi.shape[0]
g = np.abs(psi.conj().T @ psi)
np.fill_diagonal(g, 0)
levels, counts = np.unique(np.round(g, 9), return_counts=True)
print("off-diagonal levels:", dict(zip(levels.tolist(), counts.tolist())))
print("expected nonzero level:", np.sqrt(2**u / n_t))
blk = psi[:, :m]
print("first block unitary:", np.allclose(blk.conj().T @ blk, np.eye(m)))
