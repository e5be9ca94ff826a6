"""Structural and numerical analysis of polynomial reaction networks."""
from .netio import (ParseError, Reaction, ReactionNetwork, StoichStructure, build_rhs,
                    parse_network, serialize_network, stoich, validate_mass_action, validate_rates)
from .polynomial import Monomial, Polynomial

__all__ = ["Monomial", "ParseError", "Polynomial", "Reaction", "ReactionNetwork", "StoichStructure", "build_rhs",
           "parse_network", "serialize_network", "stoich", "validate_mass_action", "validate_rates"]

__version__ = "0.1.0"
