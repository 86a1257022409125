"""askdb: natural-language-to-SQL with explicit refusal of unanswerable questions.

The package translates user questions into SQL via an LLM, detects questions
that should not be answered (eight categories, from non-SQL to operator
ambiguity), executes generated queries read-only with a bounded correction
loop, and scores runs with exact-match, execution-result, and
unanswerable-detection metrics.
"""

__version__ = "0.1.0"
