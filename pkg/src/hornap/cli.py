"""Command-line front end: ``hornap <subcommand> ...``.

Exit codes: 0 when the query was answered (a bounded "nothing found" is an
answer), 1 for bad input, 2 when an internal consistency check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import amalgamation as amg
from . import entailment as ent
from . import grammar as gr
from . import reduction as red
from .logic import FiniteStructure, HornClause, StructureMap, atom, variables_of
from .syntax import parse_clause_text, parse_sentence


class CLIError(ValueError):
    pass


# -- input helpers ----------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}") from None


def _sentence(args):
    if not args.sentence:
        raise CLIError("--sentence is required")
    return parse_sentence(_read(args.sentence))


def _grammar(args):
    if not args.grammar:
        raise CLIError("--grammar is required")
    return gr.parse_grammar(_read(args.grammar))


def _goal(args, sentence) -> HornClause:
    if not args.clause:
        raise CLIError("--clause is required")
    return parse_clause_text(args.clause, sentence.signature)


def _atom_list(text: Optional[str]):
    if not text:
        return frozenset()
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    parts.append(cur)
    return frozenset(atom(p.strip()) for p in parts if p.strip())


def _names(text: Optional[str]):
    return tuple(v.strip() for v in (text or "").split(",") if v.strip())


def _positive(value: Optional[int], flag: str, default: Optional[int] = None) -> int:
    value = default if value is None else value
    if value is None:
        raise CLIError(f"{flag} is required")
    if value < 1:
        raise CLIError(f"{flag} must be positive")
    return value


def _structure_doc(s: FiniteStructure) -> dict:
    return {"domain": list(s.domain), "facts": [str(a) for a in sorted(s.facts)]}


def _alphabet(args):
    if not args.alphabet:
        raise CLIError("--alphabet is required")
    return [a for a in args.alphabet.split(",") if a]


# -- subcommands ------------------------------------------------------------------------

def cmd_entails(args):
    s = _sentence(args)
    goal = _goal(args, s)
    doc = {"goal": str(goal), "entailed": ent.entails_clause(s, goal)}
    if doc["entailed"]:
        doc["certificate"] = ent.extract_sld_certificate(s, goal).to_dict()
    else:
        doc["countermodel"] = _structure_doc(ent.countermodel(s, goal))
    return doc


def cmd_saturate(args):
    s = _sentence(args)
    goal = _goal(args, s)
    closed = ent.closure_for(s, goal)
    return {
        "domain": list(closed.domain),
        "inconsistent": closed.inconsistent,
        "atoms": [str(a) for a in sorted(closed.atoms)],
        "firings": len(closed.trace),
    }


def cmd_verify(args):
    s = _sentence(args)
    if not args.certificate:
        raise CLIError("--certificate is required")
    try:
        doc = json.loads(_read(args.certificate))
    except json.JSONDecodeError as exc:
        raise CLIError(f"certificate is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and isinstance(doc.get("counterexample"), dict):
        doc = doc["counterexample"]
    if isinstance(doc, dict) and "phi1" in doc:
        cex = amg.APCounterexample.from_dict(doc, s.signature)
        v = amg.verify_counterexample(s, cex)
        return {"certificate": "ap-counterexample", "valid": v.ok, "reason": v.reason}
    if isinstance(doc, dict) and "certificate" in doc:
        goal_text = args.clause or doc.get("goal")
        cert_doc = doc["certificate"]
    else:
        goal_text, cert_doc = args.clause, doc
    if not goal_text:
        raise CLIError("the certificate has no goal; pass --clause")
    goal = parse_clause_text(goal_text, s.signature)
    try:
        cert = ent.DeductionCertificate.from_dict(cert_doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError(f"malformed deduction certificate: {exc}") from None
    v = ent.verify_certificate(s, goal, cert)
    return {"certificate": "deduction", "goal": str(goal), "valid": v.ok, "reason": v.reason, "failedStep": v.step}


def _triple(args):
    shared = _names(args.shared)
    phi, phi1, phi2 = _atom_list(args.phi), _atom_list(args.phi1), _atom_list(args.phi2)
    if not shared:
        shared = tuple(sorted(variables_of(phi | phi1 | phi2) - {"y1", "y2"}))
    return shared, phi, phi1, phi2


def cmd_subsumes(args):
    s = _sentence(args)
    shared = _names(args.shared)
    phi, psi = _atom_list(args.phi), _atom_list(args.psi)
    extra = _names(args.extra) or tuple(sorted(variables_of(psi) - set(shared)))
    rep = amg.check_subsumption(s, phi, psi, shared, extra)
    return {"subsumes": rep.holds, "violations": ["bot" if v is None else str(v) for v in rep.violations]}


def cmd_find_ap(args):
    s = _sentence(args)
    n = _positive(args.max_vars, "--max-vars", 3)
    m = _positive(args.max_atoms, "--max-atoms", 10)
    cex = amg.find_ap_counterexample(s, n, m, identify=not args.no_identify)
    doc = {"bounds": [n, m], "found": cex is not None}
    if cex is None:
        doc["result"] = "ap holds (complete clauses)" if amg.all_clauses_complete(s) else "no counterexample within bounds"
    else:
        doc["result"] = "counterexample"
        doc["counterexample"] = cex.to_dict()
    return doc


def cmd_amalgamate(args):
    s = _sentence(args)
    shared, phi, phi1, phi2 = _triple(args)
    sig = s.signature
    A = FiniteStructure(sig, shared, phi)
    B1 = FiniteStructure(sig, shared + ("y1",), phi | phi1)
    B2 = FiniteStructure(sig, shared + ("y2",), phi | phi2)
    ident = {v: v for v in shared}
    res = amg.one_point_amalgam(s, A, B1, B2, StructureMap.of(A, B1, ident), StructureMap.of(A, B2, ident))
    if res.refuted:
        return {"outcome": "refuted", "counterexample": res.counterexample.to_dict()}
    return {
        "outcome": "amalgam",
        "amalgam": _structure_doc(res.amalgam),
        "f1": {str(k): v for k, v in res.f1.pairs},
        "f2": {str(k): v for k, v in res.f2.pairs},
    }


def cmd_enumerate_models(args):
    s = _sentence(args)
    size = args.max_size if args.max_size is not None else 1
    if size < 0:
        raise CLIError("--max-size must be non-negative")
    models = [_structure_doc(m) for m in amg.enumerate_models(s, size)]
    return {"size": size, "count": len(models), "models": models}


def cmd_brute_ap(args):
    s = _sentence(args)
    n = _positive(args.max_size, "--max-size", 3)
    t = amg.brute_force_ap(s, n)
    doc = {"maxSize": n, "found": t is not None}
    if t is not None:
        doc["triple"] = {"A": _structure_doc(t.A), "B1": _structure_doc(t.B1), "B2": _structure_doc(t.B2)}
    return doc


def cmd_regex2grammar(args):
    if not args.regex:
        raise CLIError("--regex is required")
    r = gr.parse_regex(args.regex)
    alphabet = _alphabet(args) if args.alphabet else sorted(gr.regex_literals(r))
    g = gr.regex_to_grammar(r, alphabet)
    return {"grammar": gr.format_grammar(g), "productions": len(g.productions)}


def cmd_derives(args):
    g = _grammar(args)
    if args.word is None:
        raise CLIError("--word is required")
    nt = args.nonterminal or g.start
    return {"nonterminal": nt, "word": args.word, "derives": gr.derives(g, nt, args.word)}


def cmd_universality(args):
    g = _grammar(args)
    wb = _positive(args.word_bound, "--word-bound")
    w = gr.shortest_rejected(g, wb)
    return {"wordBound": wb, "universalUpToBound": w is None, "shortestRejected": w}


def cmd_compile(args):
    out = red.compile_grammar(_grammar(args))
    return {"text": out.to_text(), "clauses": len(out.sentence.clauses), "structuralViolations": red.structural_violations(out)}


def cmd_claim1(args):
    g = _grammar(args)
    if args.word is None:
        raise CLIError("--word is required")
    nt = args.nonterminal or g.start
    out = red.compile_grammar(g)
    derived, entailed = red.check_claim1(out, nt, args.word)
    return {"nonterminal": nt, "word": args.word, "derives": derived, "entailed": entailed, "agree": derived == entailed}


def cmd_claim2(args):
    alphabet = _alphabet(args) if args.alphabet else list(_grammar(args).terminals)
    if args.word:
        atoms_ = red.encode_word(args.word).all_atoms
    else:
        atoms_ = _atom_list(args.phi)
    entailed, pattern = red.check_claim2(alphabet, atoms_)
    return {"atoms": [str(a) for a in sorted(atoms_)], "entailsBottom": entailed, "pathPattern": pattern, "agree": entailed == pattern}


def cmd_encode_word(args):
    if not args.word:
        raise CLIError("--word is required")
    e = red.encode_word(args.word)
    return {
        "word": e.word,
        "shared": list(e.shared),
        "phi": [str(a) for a in sorted(e.phi)],
        "phi1": [str(a) for a in sorted(e.phi1)],
        "phi2": [str(a) for a in sorted(e.phi2)],
    }


def cmd_decode(args):
    if not args.sentence or not args.certificate:
        raise CLIError("--sentence (a compiled file) and --certificate are required")
    out = red.read_compiled(_read(args.sentence))
    doc = json.loads(_read(args.certificate))
    if isinstance(doc.get("counterexample"), dict):
        doc = doc["counterexample"]
    cex = amg.APCounterexample.from_dict(doc, out.sentence.signature)
    v = amg.verify_counterexample(out.sentence, cex)
    if not v:
        raise CLIError(f"counterexample does not verify: {v.reason}")
    return {"word": red.decode_counterexample(out, cex)}


def cmd_cross_check(args):
    g = _grammar(args)
    wb = _positive(args.word_bound, "--word-bound")
    bounds = None
    if args.max_vars is not None or args.max_atoms is not None:
        need = red.default_ap_bounds(wb)
        bounds = (args.max_vars or need[0], args.max_atoms or need[1])
    return red.cross_check(g, wb, bounds).to_dict()


def cmd_hard_instance(args):
    k = _positive(args.k, "--k")
    g = gr.hard_instance(k)
    return {"k": k, "grammar": gr.format_grammar(g), "productions": len(g.productions)}


COMMANDS = {
    "entails": cmd_entails,
    "saturate": cmd_saturate,
    "verify": cmd_verify,
    "subsumes": cmd_subsumes,
    "find-ap": cmd_find_ap,
    "amalgamate": cmd_amalgamate,
    "enumerate-models": cmd_enumerate_models,
    "brute-ap": cmd_brute_ap,
    "regex2grammar": cmd_regex2grammar,
    "derives": cmd_derives,
    "universality": cmd_universality,
    "compile": cmd_compile,
    "claim1": cmd_claim1,
    "claim2": cmd_claim2,
    "encode-word": cmd_encode_word,
    "decode": cmd_decode,
    "cross-check": cmd_cross_check,
    "hard-instance": cmd_hard_instance,
}

# text-producing commands write the artifact itself with -o
_TEXT_PAYLOAD = {"compile": "text", "regex2grammar": "grammar", "hard-instance": "grammar"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sentence", help="sentence file (.horn)")
    common.add_argument("--grammar", help="grammar file (.grm)")
    common.add_argument("--regex")
    common.add_argument("--alphabet", help="comma-separated terminals")
    common.add_argument("--clause", help='goal clause, e.g. "P(x), E(x,y) -> Q(y)"')
    common.add_argument("--certificate", help="JSON certificate file")
    common.add_argument("--word")
    common.add_argument("--nonterminal")
    common.add_argument("--phi", help="comma-separated atoms over the shared variables")
    common.add_argument("--phi1")
    common.add_argument("--phi2")
    common.add_argument("--psi", help="extra atoms for subsumes")
    common.add_argument("--shared", help="comma-separated shared variables")
    common.add_argument("--extra", help="comma-separated extra variables")
    common.add_argument("--max-vars", type=int)
    common.add_argument("--max-atoms", type=int)
    common.add_argument("--max-size", type=int)
    common.add_argument("--word-bound", type=int)
    common.add_argument("--k", type=int, help="number of primes for hard-instance")
    common.add_argument("--no-identify", action="store_true", help="find-ap: unfold only, never merge variables")
    common.add_argument("--format", choices=("human", "json"), default="human")
    common.add_argument("--seed", type=int, default=0, help="accepted for reproducible scripting; all commands are deterministic")
    common.add_argument("--jobs", type=int, default=1, help="worker cap (searches run in one process)")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")

    parser = argparse.ArgumentParser(prog="hornap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _human(doc, indent=0) -> List[str]:
    pad = "  " * indent
    lines = []
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_human(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.extend(_human(item, indent + 1))
                lines.append(f"{pad}  --")
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: {', '.join(map(str, value)) if value else '(none)'}")
        elif isinstance(value, str) and "\n" in value:
            lines.append(f"{pad}{key}:")
            lines.extend(pad + "  " + ln for ln in value.rstrip("\n").splitlines())
        else:
            lines.append(f"{pad}{key}: {value}")
    return lines


def render(command: str, doc: dict, fmt: str, for_file: bool) -> str:
    if for_file and command in _TEXT_PAYLOAD and fmt == "human":
        return doc[_TEXT_PAYLOAD[command]]
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return "\n".join(_human(doc)) + "\n"


def run(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.jobs < 1:
            raise CLIError("--jobs must be positive")
        doc = COMMANDS[args.command](args)
        text = render(args.command, doc, args.format, bool(args.output))
        if args.output:
            try:
                Path(args.output).write_text(text)
            except OSError as exc:
                raise CLIError(f"cannot write {args.output}: {exc.strerror}") from None
        else:
            stdout.write(text)
        return 0
    except (ValueError, KeyError, TypeError) as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # noqa: BLE001 - anything else is our bug
        stderr.write(f"internal invariant violated: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
