from .validation import (
    check_int,
    check_point,
    check_points,
    check_probability,
    check_rng,
)

__all__ = ["check_int", "check_point", "check_points", "check_probability", "check_rng"]
