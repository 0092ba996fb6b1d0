"""Command-line front end: ``bosonsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .core import (
    FockConfiguration,
    InvalidInputError,
    OutputDistribution,
    ResourceLimitError,
    UnitaryMatrix,
    standard_input,
)
from .interferometer import OpticalNetlist, haar_unitary, netlist_unitary, reck_decompose, BeamSplitter
from .permanent import (
    DEFAULT_CHUNKS,
    NAIVE_MAX_N,
    RYSER_MAX_N,
    benchmark,
    log2_time_slope,
    permanent,
    set_threads,
)
from .sampler import output_distribution, sample_from
from .sources import (
    HeraldDetector,
    SourceConfig,
    SpdcSource,
    heralded_idler_distribution,
    scattershot_sample,
    simulate_input_noise,
    spdc_pair_distribution,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_IO = 4
EXIT_VERIFY = 5

VERIFY_TOL = 1e-9


class VerificationError(RuntimeError):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    tool_version: str = __version__
    unitary_digest: str | None = None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write_atomic(path: str | None, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename; stdout if no path."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_json(path: str):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc


def _load_matrix(path: str) -> np.ndarray:
    """A matrix file is either ``{"re": [[...]], "im": [[...]]}`` or a nested list."""
    obj = _read_json(path)
    try:
        if isinstance(obj, dict):
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
            arr = re + 1j * im
        else:
            arr = np.asarray(obj, dtype=np.complex128)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: malformed matrix ({exc})") from exc
    if arr.ndim != 2:
        raise InvalidInputError(f"{path}: expected a 2-D matrix")
    return arr


def _resolve_unitary(args, required: bool = True) -> UnitaryMatrix | None:
    sources = [s for s in ("matrix", "netlist") if getattr(args, s, None)]
    if getattr(args, "haar_seed", None) is not None:
        sources.append("haar_seed")
    if len(sources) > 1:
        raise InvalidInputError("give exactly one of --haar-seed, --matrix, --netlist")
    if not sources:
        if required:
            raise InvalidInputError("a unitary source is required (--haar-seed, --matrix or --netlist)")
        return None
    if sources[0] == "matrix":
        u = UnitaryMatrix(_load_matrix(args.matrix))
    elif sources[0] == "netlist":
        u = netlist_unitary(OpticalNetlist.from_json_obj(_read_json(args.netlist)))
    else:
        m = args.m
        if m is None:
            # default mode count m = n^2 when only the photon number is given
            if getattr(args, "n", None) is None:
                raise InvalidInputError("--haar-seed needs --m")
            if args.n < 1:
                raise InvalidInputError(f"need n >= 1, got {args.n}")
            m = args.n**2
        u = haar_unitary(m, args.haar_seed)
    if args.m is not None and args.m != u.m:
        raise InvalidInputError(f"--m {args.m} does not match the {u.m}-mode unitary")
    return u


def _seed(args) -> int:
    if getattr(args, "random_seed", False):
        return int(np.random.SeedSequence().entropy) % 2**64
    return args.seed


def _parameters(args) -> dict:
    skip = {"func", "out", "threads", "random_seed"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _manifest(args, seed, u: UnitaryMatrix | None) -> RunManifest:
    return RunManifest(args.command, _parameters(args), seed, __version__, u.digest() if u else None)


def _photons(args, m: int) -> int:
    if args.n is None:
        raise InvalidInputError("--n is required")
    if not 1 <= args.n <= m:
        raise InvalidInputError(f"need 1 <= n <= m, got n={args.n}, m={m}")
    return args.n


def cmd_simulate(args) -> int:
    u = _resolve_unitary(args)
    n = _photons(args, u.m)
    dist = output_distribution(u, standard_input(n, u.m))
    manifest = asdict(_manifest(args, None, u))
    if args.format == "csv":
        text = "# manifest: " + _dumps(manifest) + "\n" + dist.to_csv()
    else:
        text = _dumps({"manifest": manifest, "n": n, "m": u.m, "distribution": dist.to_json_obj()}) + "\n"
    _write_atomic(args.out, text)
    return EXIT_OK


def _noisy_samples(u, n, model, shots, rng):
    inp = standard_input(n, u.m)
    realized, ideal = simulate_input_noise(model, inp, shots, rng)
    groups: dict[FockConfiguration, list[int]] = {}
    for i, row in enumerate(realized):
        groups.setdefault(FockConfiguration(row), []).append(i)
    outputs: list[FockConfiguration | None] = [None] * shots
    for cfg in sorted(groups):
        idx = groups[cfg]
        if cfg.total() == 0:
            draws = [cfg] * len(idx)
        else:
            draws = sample_from(output_distribution(u, cfg), len(idx), rng)
        for i, s in zip(idx, draws):
            outputs[i] = s
    return outputs, ideal


def cmd_sample(args) -> int:
    u = _resolve_unitary(args)
    n = _photons(args, u.m)
    if args.shots < 1:
        raise InvalidInputError("--shots must be >= 1")
    seed = _seed(args)
    config = SourceConfig.from_json_obj(_read_json(args.noise_config)) if args.noise_config else None
    manifest = _manifest(args, seed, u)
    if config is not None:
        manifest.parameters["noise"] = config.to_json_obj()
    header = {"m": u.m, "n": n, "seed": seed, "unitary_digest": manifest.unitary_digest, "manifest": asdict(manifest)}
    lines = [_dumps(header)]
    rng = np.random.default_rng(seed)
    if args.scattershot:
        if config is None or config.source is None:
            raise InvalidInputError("--scattershot needs a noise config with 'chi'")
        herald = config.herald or HeraldDetector(1.0, "pnr")
        res = scattershot_sample(u, [config.source] * u.m, herald, args.shots, rng, n=n)
        for t, s in zip(res.heralded, res.outputs):
            lines.append(_dumps({"T": [j + 1 for j in t], "S": list(s.occupations)}))
    elif config is not None:
        outputs, ideal = _noisy_samples(u, n, config.noise, args.shots, rng)
        for s, ok in zip(outputs, ideal):
            lines.append(_dumps({"config": list(s.occupations), "ideal": bool(ok)}))
    else:
        dist = output_distribution(u, standard_input(n, u.m))
        for s in sample_from(dist, args.shots, rng):
            lines.append(_dumps(list(s.occupations)))
    _write_atomic(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_decompose(args) -> int:
    u = _resolve_unitary(args)
    nl = reck_decompose(u)
    msg = f"beamsplitters: {nl.count(BeamSplitter)}  elements: {len(nl.elements)}  modes: {nl.modes}"
    err = None
    if args.verify:
        err = float(np.linalg.norm(netlist_unitary(nl).array - u.array))
        msg += f"  frobenius_error: {err:.3e}"
    print(msg, file=sys.stderr if args.out is None else sys.stdout)
    if err is not None and not err <= VERIFY_TOL:
        raise VerificationError(f"round-trip error {err:.3e} exceeds {VERIFY_TOL:g}")
    obj = nl.to_json_obj()
    obj["manifest"] = asdict(_manifest(args, None, u))
    _write_atomic(args.out, _dumps(obj) + "\n")
    return EXIT_OK


def _fmt_complex(z: complex) -> str:
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}j"


def cmd_permanent(args) -> int:
    a = _load_matrix(args.matrix)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {a.shape[0]}x{a.shape[1]}")
    n = a.shape[0]
    methods = ["naive", "ryser"] if args.method == "both" else [args.method]
    cap = {"naive": NAIVE_MAX_N, "ryser": RYSER_MAX_N}
    for meth in methods:
        if n > cap[meth]:
            raise ResourceLimitError(f"{meth} permanent limited to n <= {cap[meth]}, got {n}")
    values = {}
    report = {"n": n, "results": []}
    for meth in methods:
        t0 = time.perf_counter()
        res = permanent(a, meth)
        elapsed = time.perf_counter() - t0
        values[meth] = res.value
        print(f"{meth}: {_fmt_complex(res.value)}  terms: {res.terms_evaluated}")
        print(f"{meth} time: {elapsed:.6f} s", file=sys.stderr)
        report["results"].append(
            {"method": meth, "re": res.value.real, "im": res.value.imag, "terms": res.terms_evaluated}
        )
    if args.method == "both":
        ref = values["naive"]
        diff = abs(values["ryser"] - ref) / max(1.0, abs(ref))
        print(f"discrepancy: {diff:.3e}")
        report["discrepancy"] = diff
    if args.out:
        # timings stay on stderr so the file is reproducible
        report["manifest"] = asdict(_manifest(args, None, None))
        _write_atomic(args.out, _dumps(report) + "\n")
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    try:
        if ":" in text or "-" in text:
            lo, hi = text.replace(":", "-").split("-")
            return list(range(int(lo), int(hi) + 1))
        return [int(text)]
    except ValueError:
        raise InvalidInputError(f"bad size range {text!r}; use N or LO:HI") from None


def cmd_bench(args) -> int:
    ns = _parse_range(args.n)
    if not ns or min(ns) < 1:
        raise InvalidInputError("sizes must be >= 1")
    if max(ns) > RYSER_MAX_N:
        raise ResourceLimitError(f"benchmark sizes limited to n <= {RYSER_MAX_N}")
    chunks = 1 if (args.threads in (None, 1)) else DEFAULT_CHUNKS
    rows = []
    print("n\tmedian_s\tterms_per_s\tconsistent")
    for n in ns:
        res = benchmark(n, args.reps, seed=args.seed, chunks=chunks)
        consistent = len(set(res.values)) == 1
        rows.append({"n": n, "times": res.times, "median": res.median,
                     "terms_per_second": res.terms_per_second, "consistent": consistent})
        print(f"{n}\t{res.median:.6e}\t{res.terms_per_second:.4e}\t{consistent}")
    report = {"rows": rows, "manifest": asdict(_manifest(args, args.seed, None))}
    if len(ns) >= 2:
        report["log2_slope"] = log2_time_slope(ns, [r["median"] for r in rows])
        print(f"log2(time) slope per unit n: {report['log2_slope']:.4f}")
    if args.out:
        _write_atomic(args.out, _dumps(report) + "\n")
    return EXIT_OK


def cmd_spdc(args) -> int:
    if args.noise_config:
        config = SourceConfig.from_json_obj(_read_json(args.noise_config))
        src, herald = config.source, config.herald
    else:
        src, herald = None, None
    if args.chi is not None:
        src = SpdcSource(args.chi)
    if args.eta is not None or args.herald_kind is not None:
        herald = HeraldDetector(
            args.eta if args.eta is not None else (herald.efficiency if herald else 1.0),
            args.herald_kind or (herald.kind if herald else "pnr"),
        )
    if src is None:
        raise InvalidInputError("need --chi or a noise config with 'chi'")
    herald = herald or HeraldDetector(1.0, "pnr")
    pairs = spdc_pair_distribution(src)
    report = {
        "chi": src.chi,
        "cutoff": src.cutoff,
        "pairs": [{"k": k, "p": p} for k, p in pairs.items()],
        "herald": {"kind": herald.kind.value, "eta": herald.efficiency},
        "heralded_idler": [{"k": k, "p": p} for k, p in heralded_idler_distribution(src, herald).items()],
        "manifest": asdict(_manifest(args, None, None)),
    }
    _write_atomic(args.out, _dumps(report) + "\n")
    return EXIT_OK


def _add_unitary_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, help="number of modes")
    p.add_argument("--haar-seed", type=int, help="draw a Haar-random unitary from this seed")
    p.add_argument("--matrix", help="unitary matrix JSON file")
    p.add_argument("--netlist", help="optical netlist JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonsim", description="Desk-scale boson-sampling simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--threads", type=int, help="cap on kernel threads")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("simulate", help="exact output distribution")
    p.add_argument("--n", type=int, help="photon count")
    _add_unitary_args(p)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="draw output samples")
    p.add_argument("--n", type=int, help="photon count")
    _add_unitary_args(p)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-seed", action="store_true", help="draw the seed from OS entropy")
    p.add_argument("--noise-config", help="noise/source configuration JSON file")
    p.add_argument("--scattershot", action="store_true", help="scattershot SPDC sources on every mode")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("decompose", help="Reck decomposition into a netlist")
    _add_unitary_args(p)
    p.add_argument("--verify", action="store_true", help="recompose and report the Frobenius error")
    common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("permanent", help="permanent of a square matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", choices=["naive", "ryser", "both"], default="ryser")
    common(p)
    p.set_defaults(func=cmd_permanent)

    p = sub.add_parser("bench", help="time the Ryser kernel")
    p.add_argument("--n", default="4", help="size or inclusive range LO:HI")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("spdc", help="SPDC pair and heralded idler distributions")
    p.add_argument("--noise-config")
    p.add_argument("--chi", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--herald-kind", choices=["bucket", "pnr"])
    common(p)
    p.set_defaults(func=cmd_spdc)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        set_threads(args.threads)
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
