"""Expression trees: building, text round trips, lengths, hashes.

Run: python demos/01_expressions.py
"""

from esrlab import expr as ex

# Parse the interchange syntax.  ^ always carries powabs semantics
# (|base| ** exponent) and "1.0 / e" denotes the reciprocal operator.
e = ex.parse("p1 / (1.0 / (p2 + x) - p3 ^ x)")
print("expression:  ", ex.render(e))
print("length:      ", ex.length(e), "nodes (operators + operands)")
print("parameters:  ", ex.param_count(e))

# Rendering and parsing invert each other exactly.
assert ex.parse(ex.render(e)) == e

# Structural hashes are deterministic functions of the tree shape: the two
# orders of an addition hash differently (semantics comes later).
a, b = ex.parse("x + p1"), ex.parse("p1 + x")
print("hash x + p1: ", hex(ex.structural_hash(a)))
print("hash p1 + x: ", hex(ex.structural_hash(b)))

# Trees are built programmatically from constructors.
tree = ex.powabs(ex.add(ex.var(), ex.param(1)), ex.param(2))
print("built:       ", ex.render(tree), "->", ex.length(tree), "nodes")
