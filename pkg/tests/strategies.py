"""Hypothesis strategies that draw generator seeds and build typed instances."""
from hypothesis import strategies as st

from gradium.generate import GenConfig
from gradium.harness import gen_typed

seeds = st.integers(min_value=0, max_value=2**32)


def instances(mode: str = "effect", algebra: str = "nat-cost", closed: bool = False, returner: bool = False, depth: int = 4):
    cfg = GenConfig(mode=mode, algebra=algebra, max_depth=depth)
    return seeds.map(lambda s: gen_typed(cfg, s, closed=closed, returner=returner))


effect_instances = instances("effect", "nat-cost")
coeffect_instances = instances("coeffect", "nat-usage")
