"""Traceable policy-based signatures from lattices."""

from .core import PRESETS, DimensionError, ParameterError, Params, get_preset, make_rng
from .kernels import BACKEND
from .scheme import (PublicParams, Signature, UserKey, extr, keygen, open_signature, setup,
                     sign, sim_keygen, sim_setup, sim_sign, verify)

__version__ = "0.1.0"

__all__ = ["BACKEND", "PRESETS", "DimensionError", "ParameterError", "Params", "PublicParams",
           "Signature", "UserKey", "extr", "get_preset", "keygen", "make_rng", "open_signature",
           "setup", "sign", "sim_keygen", "sim_setup", "sim_sign", "verify"]
