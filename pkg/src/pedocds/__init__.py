"""PedoCDS: coded footwear/insole prescription engine.

Submodules: ``catalog`` (coded feature space), ``ruledsl`` (declarative
rules with explanation traces), ``recommender`` (per-feature trees and
forests), ``geometry`` (numeric design bands), ``pressure`` (offloading
analytics), ``trial`` (N-of-1 workflow), ``store``/``api``/``cli``
(platform).
"""

__version__ = "0.1.0"

from .catalog import default_catalog  # noqa: F401
