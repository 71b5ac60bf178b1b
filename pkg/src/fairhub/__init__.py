"""fairhub: a self-contained research data management portal.

Subpackages map onto the portal's functional areas: identity and access
(core), persistent identifiers (pidreg), package storage (pkgstore), the
publication registry (pubreg), asset catalogues (catalogues), the lab
notebook registry (notebooks), workflow support (workflows), and the HTTP
gateway with its admin CLI (gateway).
"""

__version__ = "0.1.0"
