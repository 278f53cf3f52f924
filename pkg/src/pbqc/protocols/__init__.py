from .base import SCHEMES, TRANSCRIPT_VERSION, Round, Transcript
from .keyed import decode_keyed_message, encode_keyed_message
from .legacy import run_pv_bb84, run_scheme_i, run_scheme_ii, run_scheme_iii, run_scheme_iv
from .proposed import run_scheme_a, run_scheme_b

RUNNERS = {
    "pv-bb84": run_pv_bb84,
    "i": run_scheme_i,
    "ii": run_scheme_ii,
    "iii": run_scheme_iii,
    "iv": run_scheme_iv,
    "a": run_scheme_a,
    "b": run_scheme_b,
}

__all__ = [
    "RUNNERS",
    "SCHEMES",
    "TRANSCRIPT_VERSION",
    "Round",
    "Transcript",
    "decode_keyed_message",
    "encode_keyed_message",
    "run_pv_bb84",
    "run_scheme_a",
    "run_scheme_b",
    "run_scheme_i",
    "run_scheme_ii",
    "run_scheme_iii",
    "run_scheme_iv",
]
