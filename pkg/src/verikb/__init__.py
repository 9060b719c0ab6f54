"""verikb: claim verification with the knowledge base as a first-class input.

Pipeline: BM25 document retrieval -> evidence sentence selection -> ternary
veracity verdict, evaluated per (claim task, knowledge base) pair with
swappable KB strategies (single, union, none, best-evidence).
"""

__version__ = "0.1.0"
