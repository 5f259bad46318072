"""Arbitrage, pricing and hedging under integer trading constraints on finite
scenario trees."""
from .errors import IntlotError
from .market import Claim, MarketModel, Strategy, validate_model, value_process, verify_arbitrage
from .scalar import NumericContext, lin, parse_scalar, scalar_sign, scalar_to_decimal

__all__ = ["Claim", "IntlotError", "MarketModel", "NumericContext", "Strategy", "lin",
           "parse_scalar", "scalar_sign", "scalar_to_decimal", "validate_model",
           "value_process", "verify_arbitrage"]
__version__ = "0.1.0"
