"""Independent high-precision evaluation of the constants frozen into the unit tests.

Run: python3 tests/oracles/frozen_values.py
"""
from mpmath import mp, mpf, exp, log, e

mp.dps = 40


def softmax(xs, t=1):
    ws = [exp(mpf(x) / t) for x in xs]
    z = sum(ws)
    return [w / z for w in ws]


print("log_sigmoid(2)        ", -log(1 + exp(-2)))
print("softmax([1,2,3], T=2) ", softmax([1, 2, 3], 2))
p, q = [mpf("0.7"), mpf("0.3")], [mpf("0.4"), mpf("0.6")]
print("KL([.7,.3]||[.4,.6])  ", sum(a * log(a / b) for a, b in zip(p, q)))
print("H([.5,.25,.25])       ", -sum(a * log(a) for a in [mpf(1) / 2, mpf(1) / 4, mpf(1) / 4]))
print("hard+([0,1,2], tau=1) ", softmax([1, 0, -1]))
print("hard-([0,1,2], tau=1) ", softmax([-1, 0, 1]))
print("1/log2(3)             ", 1 / (log(3) / log(2)))
# Maclaurin remainder at 1: ln s(1) + ln 2 - 1/2
print("eps(1)                ", -log(1 + exp(-1)) + log(2) - mpf(1) / 2)
# Adam single step from zero moments, g=0.5, lr=1e-3: m=0.05 v=0.00025*... bias corrected
g, lr, b1, b2, eps = mpf("0.5"), mpf("0.001"), mpf("0.9"), mpf("0.999"), mpf("1e-8")
m, v = (1 - b1) * g, (1 - b2) * g * g
mh, vh = m / (1 - b1), v / (1 - b2)
print("adam step delta g=0.5 ", -lr * mh / (mp.sqrt(vh) + eps))
