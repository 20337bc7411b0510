import numpy as np
from numpy.linalg import multi_dot


def project(a, b, c):
    q, r = np.linalg.qr(a)
    return multi_dot([q, b, c])


def norms(x):
    return np.linalg.norm(x, axis=0)
