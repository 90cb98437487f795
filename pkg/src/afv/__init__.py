"""Decision procedures for restricted products of valued fields.

Subpackages cover many-sorted logic, the Boolean algebra of prime sets with
finiteness and cardinality predicates, decidable local fragments of Q_p,
Krasner hyperfields and their residue rings, the product reduction of
sentences to Boolean combinations of local ones, and the value monoid.
"""

__version__ = "0.1.0"
