"""
Tracing one arrival through the continuous phase
================================================

Two items share a dimension; the second is ten times as dense and
pushes the first out.
"""

from gmpy2 import mpq

from onlinepack.core import Item, SparseWeightVector
from onlinepack.engine import OnlinePacker
from onlinepack.objective import Modular

# one dimension, weight 1/4 each, values 1 and 10
spec = Modular({0: 1, 1: 10})
packer = OnlinePacker("3/4", spec, 1, audit=True)
w = SparseWeightVector.from_mapping({0: mpq(1, 4)}, 1)

print(packer.params)

# the first item climbs to theta = 1 on an empty dimension
first = packer.observe(Item(0, w))
print("item 0 accepted:", first.accepted, "theta:", first.theta_final)

# the second saturates the dimension, then slides item 0 down to zero
second = packer.observe(Item(1, w))
for event in second.trace.events:
    print(f"  theta={event.theta}  {event.kind.name}")
print("disposed:", second.disposed, "kept:", packer.committed(), "value:", packer.value())

# every check in the audit is exact
print(second.audit.ok)
