"""Project the entropic cone of a prepare-and-measure DAG onto observable entropies.

This takes a few seconds for the one-measurement template and a bit longer
with two measurements.
"""
import logging
import sys

from dientropy.entropic_cone import derive_facets, fig1b, fig1c, format_form, write_facets

logging.basicConfig(level=logging.INFO, format="%(message)s")
logging.getLogger("dientropy").setLevel(logging.WARNING)

one = derive_facets(fig1b())
write_facets(one, sys.stdout)

two = derive_facets(fig1c())
print(len(two.inequalities), "projected inequalities,", len(two.nontrivial_inequalities), "non-trivial")
for f in two.nontrivial_inequalities:
    print(" ", format_form(f, two.variables))
