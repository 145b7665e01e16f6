"""Pollution detection for inter-session network coding.

Library layout:

  field      prime-field arithmetic with numpy-backed linear algebra
  prf        keyed PRF mapping counters to field elements
  coding     packets, generations, combining, decoding, span membership
  hdl        discrete-log homomorphic hash and commitments
  detector   decode-first in-network verification for the hash scheme
  intermac   per-source null-space MACs, key sums, forgery game
  benaloh    dense-plaintext homomorphic encryption and inner products
  protocols  padded-key and tag-issuance commitment protocols, subspace MAC
  simulator  DAG simulator with adversaries and reports
  overhead   analytic bandwidth/computation model and figure sweeps
  cli        simulate / game / overhead / bench commands
"""

from .field import PrimeField, COUNTER
from .coding import GenerationParams, Packet, augment, combine, decode
from .prf import PrfKey, prf_eval, prf_vector

__all__ = [
    "PrimeField", "COUNTER", "GenerationParams", "Packet",
    "augment", "combine", "decode", "PrfKey", "prf_eval", "prf_vector",
]

__version__ = "0.1.0"
