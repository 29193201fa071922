"""Hypothesis strategies for valid problem parameters."""
from hypothesis import assume
from hypothesis import strategies as st

from henonpucci import ProblemParams


@st.composite
def params(draw, variant=None, p_range=(1.2, 9.0)):
    lam = draw(st.floats(0.2, 3.0))
    Lam = lam * draw(st.floats(1.0, 3.0))
    N = draw(st.integers(3, 8))
    p = draw(st.floats(*p_range))
    a = draw(st.floats(-0.9, 3.0))
    v = variant or draw(st.sampled_from(["plus", "minus"]))
    assume(v == "minus" or lam / Lam * (N - 1) + 1 > 2.05)
    return ProblemParams(lam, Lam, N, p, a, v)
