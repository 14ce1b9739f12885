from mdbs.sites.adapters import Adapter, CsvAdapter, DocumentAdapter, RelationalAdapter, build_adapter
from mdbs.sites.firewall import FirewallPolicy, FirewallRule, firewall_decide
from mdbs.sites.translate import relational_translate, translate

__all__ = [
    "Adapter",
    "CsvAdapter",
    "DocumentAdapter",
    "RelationalAdapter",
    "build_adapter",
    "FirewallPolicy",
    "FirewallRule",
    "firewall_decide",
    "relational_translate",
    "translate",
]
