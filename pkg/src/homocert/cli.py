"""Command-line front end: one subcommand per pipeline, certificates out.

Exit status contract: 0 = run completed with the expected verdict,
1 = completed with an unexpected/refuted verdict, 2 = usage error,
3 = a configured cap or budget was exceeded (partial report on stdout).
"""

from __future__ import annotations

import argparse
import os
import random
import sys

from . import certs, chainrep, cover as cover_mod, intrep, linalg, magnus
from .errors import CapExceeded, RefutedError, UsageError
from .presets import get_preset
from .stallings import (aut_orbit_closure, fiber_intersection,
                        hall_completion, index, membership)
from .words import (OrbitSpec, random_nielsen_auto, word_from_string,
                    word_to_string)

DEFAULT_SEED = 1729


def worker_count():
    """Worker cap from HOMOCERT_THREADS (default 1, serial)."""
    try:
        return max(1, int(os.environ.get("HOMOCERT_THREADS", "1")))
    except ValueError:
        return 1


def _emit(args, cert, summary_lines):
    for line in summary_lines:
        print(line)
    if args.format == "json" or args.out:
        text = certs.render(cert)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
            print(f"certificate written to {args.out}")
        else:
            sys.stdout.write(text)


def _orbit_spec(args, p_default=None):
    mode = args.orbit
    if mode == "p-primitives":
        p = args.p if args.p is not None else p_default
        if p is None:
            raise UsageError("--orbit p-primitives needs --p")
        return OrbitSpec(seeds=(), radius=args.radius, mode="p-primitives", p=p)
    if mode == "primitives":
        return OrbitSpec(seeds=(), radius=args.radius, mode="primitives")
    if mode.startswith("custom:"):
        words = tuple(word_from_string(s, args.n)
                      for s in mode[len("custom:"):].split(","))
        return OrbitSpec(seeds=words, radius=args.radius, mode="custom",
                         exact=args.exact_orbit)
    raise UsageError(f"unknown orbit mode {mode!r}")


def _preset(args):
    kwargs = {}
    if args.preset == "zassenhaus":
        kwargs = {"n": args.n, "p": args.p or 2, "k": args.k or 1,
                  "cap": args.cap}
    return get_preset(args.preset, **kwargs)


# ---------------------------------------------------------------------------
# subcommands

def cmd_phi(args):
    phi = magnus.build_phi(args.n, args.p, args.k)
    checked = magnus.verify_phi(phi, threads=worker_count())
    config = {"command": "phi", "n": args.n, "p": args.p, "k": args.k,
              "seed": args.seed}
    payload = {"phi": phi.to_json(), "nonzeroVectorsChecked": checked,
               "verdict": "verified"}
    cert = certs.assemble("phi", config, payload)
    _emit(args, cert, [f"phi({args.n},{args.p},{args.k}): verifier passed on "
                       f"{checked} nonzero vectors"])
    return 0


def cmd_group(args):
    group = magnus.enumerate_group(args.n, args.p, args.k, cap=args.cap)
    phi = magnus.build_phi(args.n, args.p, args.k)
    record = magnus.psi_and_centerpower_check(group, phi)
    config = {"command": "group", "n": args.n, "p": args.p, "k": args.k,
              "cap": args.cap, "seed": args.seed}
    cert = certs.assemble("group", config, record)
    lines = [f"group({args.n},{args.p},{args.k}): order {group.size}, "
             f"graded dims {tuple(group.graded_dims)}",
             f"center-power check: {record['verdict']}"]
    _emit(args, cert, lines)
    return 0 if record["verdict"] == "verified" else 1


def _build_witness_context(args):
    preset = _preset(args)
    cover = cover_mod.build_cover(preset.surjection)
    projector = None
    if preset.has_projector:
        projector = cover_mod.psi_projector(cover, preset.central, preset.psi,
                                            preset.p)
    return preset, cover, projector


def cmd_witness(args):
    preset, cover, projector = _build_witness_context(args)
    spec = _orbit_spec(args, p_default=preset.p)
    cert_data = cover_mod.proper_subspace_certificate(
        cover, projector, spec,
        instance={"preset": preset.name, "n": cover.n, "p": preset.p})
    config = {"command": "witness", "preset": preset.name,
              "orbit": spec.describe(), "seed": args.seed}
    cert = certs.assemble("witness", config, cert_data.to_payload())
    dims = cert_data.dims
    lines = [f"witness {preset.name}: dim H1 = {dims['h1']}, span = {dims['span']}, "
             f"projector rank = {dims['projRank']}, projected span rank = "
             f"{dims['projSpanRank']}",
             f"verdict: {cert_data.verdict}"]
    _emit(args, cert, lines)
    return 0 if cert_data.verdict == "proper" else 1


def cmd_chainrep(args):
    preset, cover, projector = _build_witness_context(args)
    if projector is None:
        raise UsageError("chainrep needs a preset with central character data")
    rng = random.Random(args.seed)
    shifted = [random_nielsen_auto(rng, cover.n, 6) for _ in range(args.bases)]
    pool = chainrep.transvection_power_pool(cover, shifted_bases=shifted)
    triviality = []
    all_trivial = True
    for label, auto in pool:
        mat = chainrep.project_to_w(cover, projector, auto)
        trivial = linalg.is_identity(mat)
        all_trivial = all_trivial and trivial
        triviality.append({"pool": label, "projectedIdentity": trivial})
    if args.pool == "autr":
        pool = chainrep.find_autr_pool(cover, projector) or pool
    report = chainrep.search_infinite_order(cover, projector, pool, args.budget)
    config = {"command": "chainrep", "preset": preset.name, "seed": args.seed,
              "budget": args.budget, "bases": args.bases, "pool": args.pool}
    payload = {"transvectionPowerTriviality": triviality,
               "allTransvectionPowersTrivial": all_trivial,
               "search": report}
    cert = certs.assemble("chainrep", config, payload)
    lines = [f"chainrep {preset.name}: {len(triviality)} transvection powers, "
             f"all projected to identity: {all_trivial}",
             f"infinite-order search: found={report['found']} "
             f"(explored {report['explored']}, distinct {report['distinct']})"]
    _emit(args, cert, lines)
    return 0


def cmd_intrep(args):
    preset, cover, projector = _build_witness_context(args)
    spec = _orbit_spec(args, p_default=preset.p)
    from .words import enumerate_orbit_ball
    words = enumerate_orbit_ball(spec, cover.n)
    classes = cover_mod.orbit_power_classes(cover, words)
    quotient = intrep.witness_pipeline_quotient(cover,
                                                [pc.coords for pc in classes])
    rep = intrep.build_induced_rep(cover, quotient)
    finite = intrep.verify_finite_orbit_images(rep, classes)
    witness = intrep.find_infinite_order_witness(rep, budget=args.budget)
    rng = random.Random(args.seed)
    from .words import random_reduced_word, multiply
    hom_ok = True
    for _ in range(args.pairs):
        u = random_reduced_word(rng, cover.n, rng.randrange(0, 7))
        v = random_reduced_word(rng, cover.n, rng.randrange(0, 7))
        lhs = linalg.int_mat_mul(rep.rho(u), rep.rho(v))
        if not linalg.mat_eq(lhs, rep.rho(multiply(u, v))):
            hom_ok = False
            break
    verdict = "verified" if (witness is not None and hom_ok) else "inconclusive"
    config = {"command": "intrep", "preset": preset.name,
              "orbit": spec.describe(), "seed": args.seed,
              "budget": args.budget, "pairs": args.pairs}
    payload = {"quotient": quotient.describe(), "degree": rep.degree,
               "orbitWordsChecked": len(finite),
               "homomorphismPairs": args.pairs, "homomorphismOk": hom_ok,
               "infiniteWitness": witness,
               "virtuallyAbelian": {"abelianBlockIndex": cover.N,
                                    "note": "finite-index abelian block subgroup"},
               "verdict": verdict}
    cert = certs.assemble("intrep", config, payload)
    lines = [f"intrep {preset.name}: degree {rep.degree}, quotient rank "
             f"{quotient.rank}, torsion {quotient.torsion}",
             f"finite orbit images: {len(finite)} verified; infinite witness: "
             f"{witness['word'] if witness else 'not found'}",
             f"verdict: {verdict}"]
    _emit(args, cert, lines)
    return 0 if verdict == "verified" else 1


def cmd_hall(args):
    if not args.words:
        raise UsageError("hall needs --words")
    seeds = [word_from_string(s, args.n) for s in args.words.split(",")]
    steps = []
    subgroups = []
    for s in seeds:
        completed, cert = hall_completion(s)
        orbit = aut_orbit_closure(completed, max_orbit=args.cap)
        characteristic = fiber_intersection(orbit, max_index=args.cap)
        subgroups.append(characteristic)
        steps.append({
            "word": word_to_string(s),
            "completionIndex": index(completed),
            "crossingCount": cert.crossing_count,
            "basisPosition": cert.word_position,
            "orbitSize": len(orbit),
            "characteristicIndex": index(characteristic),
        })
    r1 = fiber_intersection(subgroups, max_index=args.cap)
    for s in seeds:
        if not membership(r1, s ** _power_into(r1, s)):
            raise RefutedError("seed power escaped the intersection")
    surj = cover_mod.surjection_from_covering(r1)
    complex_ = cover_mod.build_cover(surj)
    class_cols = []
    for s in seeds:
        m = _power_into(r1, s)
        chain = cover_mod.lift_chain(complex_, s ** m)
        class_cols.append(complex_.tree_coords(chain))
    prime, divisors = cover_mod.select_prime(class_cols)
    config = {"command": "hall", "n": args.n, "words": args.words,
              "cap": args.cap, "seed": args.seed}
    payload = {"steps": steps, "intersectionIndex": index(r1),
               "h1Rank": complex_.h1_dim,
               "classDivisors": divisors, "selectedPrime": prime}
    cert = certs.assemble("hall", config, payload)
    lines = [f"hall: intersection index {index(r1)}, H1 rank {complex_.h1_dim}, "
             f"selected prime {prime}"]
    if args.format == "dot":
        dot = r1.to_dot()
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(dot)
            print(f"DOT written to {args.out}")
        else:
            sys.stdout.write(dot)
        for line in lines:
            print(line)
        return 0
    _emit(args, cert, lines)
    return 0


def _power_into(graph, word):
    m = 1
    while not membership(graph, word ** m):
        m += 1
        if m > graph.num_vertices + 1:
            raise RefutedError("no bounded power lies in the subgroup")
    return m


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="homocert",
        description="Exact certificates for covering-space homology of free groups")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset=False, orbit=False):
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--cap", type=int, default=1_000_000)
        p.add_argument("--budget", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["json", "dot", "txt"], default="txt")
        if preset:
            p.add_argument("--preset", default="q8")
        if orbit:
            p.add_argument("--orbit", default="p-primitives")
            p.add_argument("--radius", type=int, default=6)
            p.add_argument("--exact-orbit", action="store_true")

    p = sub.add_parser("phi", help="build and exhaustively verify the "
                                   "coefficient functional")
    common(p)
    p = sub.add_parser("group", help="enumerate the Magnus-model p-group and "
                                     "run the center-power check")
    common(p)
    p = sub.add_parser("witness", help="full properness certificate for a preset")
    common(p, preset=True, orbit=True)
    p = sub.add_parser("chainrep", help="transvection triviality and the "
                                        "infinite-order search")
    common(p, preset=True)
    p.add_argument("--bases", type=int, default=3)
    p.add_argument("--pool", choices=["transvections", "autr"],
                   default="transvections")
    p = sub.add_parser("intrep", help="integral representation pipeline")
    common(p, preset=True, orbit=True)
    p.add_argument("--pairs", type=int, default=100)
    p = sub.add_parser("hall", help="completion / orbit / intersection demo")
    common(p)
    p.add_argument("--words", default=None)
    return parser


_COMMANDS = {
    "phi": cmd_phi,
    "group": cmd_group,
    "witness": cmd_witness,
    "chainrep": cmd_chainrep,
    "intrep": cmd_intrep,
    "hall": cmd_hall,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command in ("phi", "group"):
            if args.p is None or args.k is None:
                raise UsageError(f"{args.command} needs --p and --k")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return 3
    except RefutedError as exc:
        print(f"refuted: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
