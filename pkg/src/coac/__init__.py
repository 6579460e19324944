from .su_space import SpatialUnrolling, parse_su  # noqa: F401
