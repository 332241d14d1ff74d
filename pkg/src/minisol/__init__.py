"""minisol: a definitional interpreter and bounded symbolic-execution
engine for a Solidity-subset contract language over a block-addressed
formal memory."""

__version__ = "0.1.0"
