"""AWhile: a while-language with arrays, its sequential and speculative
semantics, IFC analyses, the speculative-load-hardening transformation
family, and a bounded differential checker for speculative security
properties."""

__version__ = "0.1.0"
