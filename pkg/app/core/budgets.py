"""
Budget guards for exhaustive computations.
"""

from app.core.config import settings
from app.core.errors import BudgetExceededError


class BudgetChecker:
    """Callable guard that rejects sizes above a named settings budget"""

    def __init__(self, setting_name: str, what: str):
        self.setting_name = setting_name
        self.what = what

    @property
    def limit(self) -> int:
        return getattr(settings, self.setting_name)

    def __call__(self, size: int, limit: int | None = None) -> int:
        """Return size if it fits, otherwise raise BudgetExceededError"""
        allowed = self.limit if limit is None else limit
        if size > allowed:
            raise BudgetExceededError(
                f"{self.what} of size {size} exceeds {self.setting_name}={allowed}"
            )
        return size


# Pre-defined guards

# make_torus
require_vertex_budget = BudgetChecker("VERTEX_BUDGET", "Torus")

# enumerate_J and everything built on it
require_enumerable = BudgetChecker("ENUMERATION_BUDGET", "Enumeration over a torus")

# enumerate_GA_pairs (size of the odd class)
require_pair_enumerable = BudgetChecker("PAIR_ENUMERATION_BUDGET", "Pair enumeration")

# legal_cover_search (vertices of the bigraph)
require_cover_searchable = BudgetChecker("LEGAL_COVER_BUDGET", "Legal cover search")

# count_connected_induced (vertices of the host graph)
require_tree_countable = BudgetChecker("TREE_COUNT_BUDGET", "Connected subgraph count")
