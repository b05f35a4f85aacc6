"""
The semidefinite solver on its own
==================================

The SDP format keeps decision variables free and puts all conic structure
on affine matrix expressions, which is exactly the shape of a moment
relaxation.  This script solves a tiny problem directly and round-trips it
through the sparse text format.
"""

import io

import numpy as np

from momentsos import PsdBlock, SdpProblem, read_sparse_sdp, solve_sdp, write_sparse_sdp

# minimize w2 subject to [[w1, 1], [1, w2]] PSD and w1 = 2.
# The block is G(w) = G0 + w1*G1 + w2*G2 with G0 holding the off-diagonal.
blk = PsdBlock.from_dense(
    const=np.array([[0.0, 1.0], [1.0, 0.0]]),
    coeffs={
        0: np.array([[1.0, 0.0], [0.0, 0.0]]),
        1: np.array([[0.0, 0.0], [0.0, 1.0]]),
    },
)
prob = SdpProblem(
    nfree=2,
    objective=[0.0, 1.0],
    eq_a=[[1.0, 0.0]],
    eq_b=[2.0],
    psd_blocks=[blk],
)

sol = solve_sdp(prob)
print("status      :", sol.status.value)
print("w           :", np.round(sol.x, 8))         # w2 = 1/2 since w1*w2 >= 1
print("primal value:", sol.obj_primal)
print("dual value  :", sol.obj_dual)
print("iterations  :", sol.iterations)
print("residuals   :", {k: f"{v:.2e}" for k, v in sol.residuals.items()})

# The dual carries one multiplier per equality row and one PSD matrix per
# block; stationarity  c = A^T y + sum G*(Z)  is easy to verify by hand.
z = sol.psd_duals[0]
resid = prob.objective - prob.eq_a.T @ sol.y_eq - blk.adjoint(z, prob.nfree)
print("\ndual block Z:\n", np.round(z, 6))
print("stationarity residual:", np.abs(resid).max())

# Problems serialize to a line-oriented sparse text format and back.
buf = io.StringIO()
write_sparse_sdp(prob, buf)
print("\nsparse dump:")
print(buf.getvalue())
buf.seek(0)
again = solve_sdp(read_sparse_sdp(buf))
print("re-solved value:", again.obj_primal)
