"""Exact rational engine: linear algebra, sequences, operads, (co)algebras and the bar/cobar constructions."""
