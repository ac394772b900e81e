"""Coefficient tables for symmetric compositions of a first-order map and its adjoint.

A scheme is a list of pairs (alpha_i, beta_i); one step applies
Phi*_{beta_1 h}, Phi_{alpha_1 h}, Phi*_{beta_2 h}, ..., Phi_{alpha_s h}.

Sources:
  R. I. McLachlan, On the numerical integration of ordinary differential
  equations by symmetric composition methods, SIAM J. Sci. Comput. 16
  (1995) 151-168 -- the s = 5, order-4 method (closed form in sqrt(19)),
  in the (alpha, beta) layout of Hairer, Lubich & Wanner, Geometric
  Numerical Integration, 2nd ed., Sec. V.3.2.
  S. Blanes, P. C. Moan, Practical symplectic partitioned Runge-Kutta and
  Runge-Kutta-Nystrom methods, J. Comput. Appl. Math. 142 (2002) 313-330 --
  the 6-stage order-4 splitting (a_1..a_7, b_1..b_6) rewritten as six
  (alpha, beta) pairs via b_i = alpha_i + beta_i, a_1 = beta_1,
  a_{i+1} = alpha_i + beta_{i+1}, a_7 = alpha_6.
"""
import math

_R19 = math.sqrt(19.0)

MCLACHLAN_S5_ORDER4 = (
    ((146.0 + 5.0 * _R19) / 540.0, (14.0 - _R19) / 108.0),
    ((-2.0 + 10.0 * _R19) / 135.0, (-23.0 - 20.0 * _R19) / 270.0),
    (1.0 / 5.0, 1.0 / 5.0),
    ((-23.0 - 20.0 * _R19) / 270.0, (-2.0 + 10.0 * _R19) / 135.0),
    ((14.0 - _R19) / 108.0, (146.0 + 5.0 * _R19) / 540.0),
)

# Blanes & Moan S6 in splitting form
BM_A = (0.0792036964311957, 0.353172906049774, -0.0420650803577195)
BM_B = (0.209515106613362, -0.143851773179818)


def _blanes_moan_pairs():
    a = list(BM_A) + [1.0 - 2.0 * sum(BM_A)] + list(BM_A[::-1])
    b3 = 0.5 - sum(BM_B)
    b = list(BM_B) + [b3, b3] + list(BM_B[::-1])
    beta = [a[0]]
    alpha = []
    for i in range(6):
        alpha.append(b[i] - beta[i])
        if i < 5:
            beta.append(a[i + 1] - alpha[i])
    # symmetrize the last rounding bit so the palindrome holds exactly
    pairs = []
    for i in range(6):
        j = 5 - i
        al = 0.5 * (alpha[i] + beta[j])
        be = 0.5 * (beta[i] + alpha[j])
        pairs.append((al, be))
    return tuple(pairs)


BLANES_MOAN_S6_ORDER4 = _blanes_moan_pairs()

STRANG = ((0.5, 0.5),)
