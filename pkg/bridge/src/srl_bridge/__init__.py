"""Transformer bridge for the SRL toolkit.

Fine-tunes a BERT-style encoder with a linear token-classification head
and exports word-level emission matrices in the toolkit's emission file
format.  All interaction with the toolkit goes through its documented
file formats and the ``srl`` command line; nothing here imports it.
"""

__version__ = "0.1.0"


class BridgeError(Exception):
    """Raised for invalid configs, data, or failed toolkit calls."""
