"""Shared hypothesis strategies: seeds and small dimensions drive the numpy samplers."""
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2**32 - 1)
small_dims = st.integers(min_value=2, max_value=6)
