"""Kill switches for load-bearing checks, used by the sensitivity suite.

Each flag disables one guard in the checkers.  They exist so the test suite
can demonstrate that the guard actually carries weight: flipping any of
them must make at least one test fail.  All default to False.
"""

DISABLE_GOOD_BOUNDS = False
DISABLE_UNPACK_GUARD = False
DISABLE_CTX_RESTRICT = False
