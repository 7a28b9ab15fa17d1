"""homocert: exact-arithmetic certificates for the homology of finite
covers of free groups.

Subpackages by pipeline stage: words (free group + Nielsen moves),
stallings (subgroup graphs), magnus (truncated algebra p-group model),
cover (covering complex, projectors, span certificates), chainrep (the
chain representation and order decisions), intrep (integral induced
representations), cli (orchestration).
"""

__version__ = "0.1.0"
