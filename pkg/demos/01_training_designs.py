"""Walk through the six training designs on a small array.

Builds each codebook, checks its power budget, assembles the sensing matrix
and prints the coherence next to its closed form.
"""
import numpy as np

from celldisc import build_codebook, mutual_coherence, scheme_mu_closed_form, sensing_matrix

n_t, n_r, n_bs = 64, 8, 4
rng = np.random.default_rng(0)

designs = [
    ("bs", {}),
    ("bc", dict(beta_t=2, beta_r=2)),
    ("dbs", {}),
    ("dbc", dict(beta_t=4)),
    ("mubb", dict(u=0)),
    ("mubb", dict(u=1)),
    ("rbf", dict(u=1)),
]

print(f"{'scheme':14s} {'M':>5s} {'tx power':>9s} {'mu':>8s} {'closed':>8s}")
for name, kw in designs:
    cb = build_codebook(name, n_t, n_r, n_bs, rng=rng, **kw)
    mu = mutual_coherence(sensing_matrix(cb))
    closed = scheme_mu_closed_form(name, n_t=n_t, n_bs=n_bs, u=kw.get("u", 0))
    closed = "-" if closed is None else f"{closed:.4f}"
    print(f"{cb.label():14s} {cb.m_total:5d} {cb.tx_power():9.1f} {mu:8.4f} {closed:>8s}")

# every design spends n_t * n_r units of transmit energy per BS
print("budget n_t*n_r =", n_t * n_r)
