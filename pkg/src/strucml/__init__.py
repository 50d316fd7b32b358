"""Surrogate modeling, explainability auditing, and constrained design search
for structural engineering datasets.

Subpackages cover dataset ingestion and health gates, regression metrics, an
engineering formula pack, from-scratch regression surrogates with a seeded
training protocol, Shapley/local-surrogate attributions and their
disagreement audit, genetic-programming symbolic regression, constrained
design-space search, k-means hypothesis generation, and bi-objective design
optimization with a constructability (section catalog) check.
"""

__version__ = "0.1.0"
