"""Declarative queries over a fitted model network."""

from psm.inference.engine import QueryResult, fitted_curve, resolve_ref, run
from psm.inference.query import Query, parse_query

__all__ = ["Query", "parse_query", "run", "QueryResult", "resolve_ref", "fitted_curve"]
