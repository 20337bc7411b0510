"""Helpers; the docstring mentions np.fake_call() which is not code."""
import scipy.stats as st
from scipy import optimize

# np.commented_out() should not count
def fit(data):
    loc, scale = st.norm.fit(data)
    res = optimize.minimize(lambda p: (p[0] - loc) ** 2, x0=[0.0])
    return st.norm(loc, scale), res
