"""
The numerical building blocks
=============================

Row-sparsity norm, its reweighted quadratic surrogate, the Procrustes step
and the scatter matrices, each checked against a direct computation.
"""
import numpy as np

import discrim_embed as de

rng = np.random.default_rng(0)

# l2,1: sum of row norms. A zero row contributes nothing, which is why the
# penalty switches whole features off.
z = rng.standard_normal((5, 3))
z[2] = 0.0
print("row norms     ", np.round(np.linalg.norm(z, axis=1), 4))
print("l21 norm      ", de.l21_norm(z))

# The reweighting diagonal D = diag(1 / (||row|| + eps)) turns the norm into
# a quadratic form: tr(z' D z) -> ||z||_21 as eps -> 0
for eps in (1e-1, 1e-4, 1e-10):
    dd = de.row_weight_matrix(z, eps)
    print(f"eps={eps:g}  tr(z'Dz) = {np.trace(z.T @ dd.as_matrix() @ z):.10f}")

# Procrustes: the orthonormal P closest to M in trace inner product
m = rng.standard_normal((4, 4))
p, rank_deficient = de.procrustes_orthogonal(m)
print("\nP'P - I      ", np.linalg.norm(p.T @ p - np.eye(4)))
print("tr(P'M)      ", np.trace(p.T @ m), " = nuclear norm", np.linalg.norm(m, "nuc"))

# Scatter matrices on a small labeled set (samples are columns)
labels = np.repeat([0, 1, 2], 10)
x = rng.standard_normal((3, 30)) + 3 * np.eye(3)[:, labels]
data = de.LabeledDataset(x, labels)
sc = de.compute_scatter(data, balance=0.1)
xc = x - x.mean(axis=1, keepdims=True)
print("\nS_w + S_b == total scatter:",
      np.allclose(sc.s_w + sc.s_b, xc @ xc.T / data.n_samples))
print("eigenvalues of S = S_w - 0.1 S_b:", np.round(np.linalg.eigvalsh(sc.s), 4))

# LDA in difference form keeps the eigenvectors of the smallest eigenvalues
lda = de.fit_lda(data, 0.1, 2)
print("LDA eigenvalues:", np.round(lda.eigenvalues, 4))
