"""Amalgamation for finite models of universal Horn sentences.

Deduction with checkable certificates, a one-point amalgamation test with
verified counterexamples, a brute-force semantic oracle, and the encoding
of regular-grammar universality into amalgamation.
"""

from .amalgamation import (
    AmalgamResult,
    APCounterexample,
    SubsumptionReport,
    brute_force_ap,
    check_subsumption,
    enumerate_models,
    find_amalgam,
    find_ap_counterexample,
    free_amalgam,
    one_point_amalgam,
    verify_counterexample,
)
from .entailment import (
    DeductionCertificate,
    countermodel,
    entails_clause,
    extract_sld_certificate,
    saturate,
    verify_certificate,
)
from .grammar import Grammar, accepts, hard_instance, parse_grammar, parse_regex, regex_to_grammar, shortest_rejected
from .logic import (
    Atom,
    FiniteStructure,
    HornClause,
    Signature,
    StructureMap,
    UniversalHornSentence,
    atom,
    atoms,
    canonical_form,
    clause,
    is_complete_clause,
    satisfies,
)
from .reduction import compile_grammar, cross_check, decode_counterexample, encode_word
from .syntax import parse_sentence, print_sentence

__version__ = "0.1.0"
