"""Command-line front end.

Five subcommands: ``estimate`` (event probabilities), ``rc`` (crossing-point
location with its duality partner), ``decay`` (survival tables and fits),
``verify`` (self-checks against exact ground truth), and ``sample`` (binary
bond-configuration dumps).

Configuration is flat ``key=value`` tokens, optionally seeded from a JSON
file via ``--config``; tokens override the file, and the dedicated flags
(``--seed``, ``--threads``, ``--out``, ``--format``) override both.  Unknown
keys are rejected.  Every output starts with the fully resolved
configuration in ``#`` comment lines (minus the thread count, which never
affects any number) and contains nothing run-dependent, so a rerun with the
same inputs is byte-identical at any thread count.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from fractions import Fraction

import numpy as np

from . import estimators
from .bonds import Window, dump_bonds, sample_bonds
from .colouring import Colour
from .connectivity import CrossingSpec, Direction
from .estimators import P_C
from .events import CircuitEvent, CrossingEvent, EventSpec, VertexBlackEvent
from .lattice import AdjacencyMode, AnnulusRegion, RectRegion, Topology
from .oracle import brute_force_circuit, exhaustive_selfdual_check
from .pivotal import russo_check


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse's exit(2) into exit(1)
        raise UsageError(message)


_TOPOLOGIES = {"square": Topology.SQUARE, "triangular": Topology.TRIANGULAR}
_DIRECTIONS = {"vertical": Direction.VERTICAL, "horizontal": Direction.HORIZONTAL}
_MODES = {"ordinary": AdjacencyMode.ORDINARY, "star": AdjacencyMode.STAR}
_COLOURS = {"black": Colour.BLACK, "white": Colour.WHITE}


def _parse_value(key: str, raw: str, schema: dict):
    kind = schema[key][0]
    try:
        if kind is bool:
            return raw.lower() in ("1", "true", "yes")
        return kind(raw)
    except (ValueError, KeyError):
        raise UsageError(f"bad value {raw!r} for key {key!r}")


def _resolve(schema: dict, config_path: str | None, tokens: list[str], flags: dict) -> dict:
    """defaults < JSON config < key=value tokens < dedicated flags."""
    resolved = {k: v[1] for k, v in schema.items()}
    if config_path:
        try:
            with open(config_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config_path}: {exc}")
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in data.items():
            if k not in schema:
                raise UsageError(f"unknown config key {k!r}")
            resolved[k] = _parse_value(k, str(v), schema)
    for tok in tokens:
        if "=" not in tok:
            raise UsageError(f"expected key=value, got {tok!r}")
        k, raw = tok.split("=", 1)
        if k not in schema:
            raise UsageError(f"unknown config key {k!r}")
        resolved[k] = _parse_value(k, raw, schema)
    for k, v in flags.items():
        if v is not None:
            resolved[k] = v
    missing = [k for k, v in resolved.items() if v is None and schema[k][2]]
    if missing:
        raise UsageError(f"missing required keys: {', '.join(sorted(missing))}")
    return resolved


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (Topology, Direction, AdjacencyMode, Colour)):
        return v.value
    return str(v)


def _header(cfg: dict) -> list[str]:
    # threads is an execution knob that never changes any number, so it is
    # kept out of the echo to make outputs byte-identical at any thread count
    return [f"# {k} = {_fmt(cfg[k])}" for k in sorted(cfg) if k != "threads"]


def _emit(out_path: str | None, text: str) -> None:
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(cfg: dict, columns: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        payload = {
            "config": {k: _fmt(v) for k, v in sorted(cfg.items()) if k != "threads"},
            "columns": columns,
            "rows": [[_fmt(x) for x in row] for row in rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for line in _header(cfg):
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def _floats(raw: str) -> list[float]:
    try:
        return [float(x) for x in str(raw).split(",") if x != ""]
    except ValueError:
        raise UsageError(f"bad float list {raw!r}")


# --- estimate --------------------------------------------------------------

_ESTIMATE_SCHEMA = {
    # key: (type, default, required)
    "topology": (str, "square", False),
    "p": (float, None, True),
    "r": (str, None, True),
    "event": (str, "crossing", False),
    "direction": (str, "vertical", False),
    "mode": (str, "ordinary", False),
    "colour": (str, "black", False),
    "n": (int, 16, False),
    "aspect": (int, 1, False),
    "m": (int, 2, False),
    "vertex": (str, "0,0", False),
    "pad": (int, -1, False),
    "n_samples": (int, 10_000, False),
    "seed": (int, 0, False),
    "threads": (int, 1, False),
}


def _lookup(table: dict, key: str, what: str):
    if key not in table:
        raise UsageError(f"unknown {what} {key!r}; choose from {sorted(table)}")
    return table[key]


def _build_event(cfg: dict) -> tuple[EventSpec, Window, str]:
    topology = _lookup(_TOPOLOGIES, cfg["topology"], "topology")
    pad = None if cfg["pad"] < 0 else cfg["pad"]
    kind = cfg["event"]
    if kind == "crossing":
        rect = RectRegion(0, cfg["n"], 0, cfg["n"] * cfg["aspect"])
        spec = CrossingSpec(
            rect,
            _lookup(_DIRECTIONS, cfg["direction"], "direction"),
            _lookup(_COLOURS, cfg["colour"], "colour"),
            _lookup(_MODES, cfg["mode"], "mode"),
        )
        label = f"crossing:{cfg['direction']}:{cfg['colour']}:{cfg['mode']}"
        return CrossingEvent(spec), Window.around(rect, pad), label
    if kind == "circuit":
        a = AnnulusRegion(0, 0, cfg["m"])
        ev = CircuitEvent(
            a,
            _lookup(_COLOURS, cfg["colour"], "colour"),
            _lookup(_MODES, cfg["mode"], "mode"),
        )
        label = f"circuit:{cfg['colour']}:{cfg['mode']}:m={cfg['m']}"
        return ev, Window.around(a.outer_rect, pad), label
    if kind == "vertex":
        parts = cfg["vertex"].split(",")
        if len(parts) != 2:
            raise UsageError(f"bad vertex {cfg['vertex']!r}")
        v = (int(parts[0]), int(parts[1]))
        core = RectRegion(v[0] - 1, v[0] + 1, v[1] - 1, v[1] + 1)
        # colon-separated so the label stays a single CSV cell
        return VertexBlackEvent(v), Window.around(core, pad), f"vertex:{v[0]}:{v[1]}"
    raise UsageError(f"unknown event kind {cfg['event']!r}")


def cmd_estimate(cfg: dict, fmt: str, out: str | None) -> int:
    topology = _lookup(_TOPOLOGIES, cfg["topology"], "topology")
    event, window, label = _build_event(cfg)
    warn = "supercritical_p" if cfg["p"] > P_C[topology] else ""
    rows = []
    for r in _floats(cfg["r"]):
        if not 0.0 <= r <= 1.0:
            raise UsageError(f"r={r} outside [0, 1]")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", estimators.SupercriticalWarning)
            est = estimators.estimate_event_prob(
                topology, window, cfg["p"], r, event,
                cfg["n_samples"], cfg["seed"], threads=cfg["threads"],
            )
        rows.append(
            [cfg["topology"], cfg["p"], r, label, cfg["n"], est.value, est.stderr,
             est.n_samples, est.censored_fraction, est.seed, warn]
        )
    columns = ["topology", "p", "r", "event", "n", "value", "stderr",
               "n_samples", "censored_fraction", "seed", "warn"]
    _emit(out, _table(cfg, columns, rows, fmt))
    return 0


# --- rc --------------------------------------------------------------------

_RC_SCHEMA = {
    "topology": (str, "square", False),
    "p": (float, None, True),
    "n": (int, None, True),
    "aspect": (int, 1, False),
    "pad": (int, -1, False),
    "method": (str, "threshold-median", False),
    "n_samples": (int, 10_000, False),
    "seed": (int, 0, False),
    "threads": (int, 1, False),
}


def cmd_rc(cfg: dict, fmt: str, out: str | None) -> int:
    topology = _lookup(_TOPOLOGIES, cfg["topology"], "topology")
    pad = None if cfg["pad"] < 0 else cfg["pad"]
    results = []
    for direction, mode in (
        (Direction.VERTICAL, AdjacencyMode.ORDINARY),
        (Direction.HORIZONTAL, AdjacencyMode.STAR),
    ):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", estimators.SupercriticalWarning)
            results.append(
                estimators.estimate_rc(
                    topology, cfg["p"], cfg["n"], cfg["n_samples"], cfg["seed"],
                    aspect=cfg["aspect"], direction=direction, mode=mode,
                    threads=cfg["threads"], method=cfg["method"], pad=pad,
                )
            )
    duality_sum = results[0].r_hat + results[1].r_hat
    columns = ["topology", "p", "n", "aspect", "direction", "mode", "r_hat",
               "ci_low", "ci_high", "method", "n_samples", "seed",
               "censored_fraction", "duality_sum"]
    rows = [
        [cfg["topology"], cfg["p"], cfg["n"], cfg["aspect"], e.direction, e.mode,
         e.r_hat, e.ci[0], e.ci[1], e.method, e.n_samples, e.seed,
         e.censored_fraction, duality_sum]
        for e in results
    ]
    _emit(out, _table(cfg, columns, rows, fmt))
    return 0


# --- decay -----------------------------------------------------------------

_DECAY_SCHEMA = {
    "topology": (str, "square", False),
    "p": (float, None, True),
    "kind": (str, "range", False),   # range | size
    "r": (float, 0.5, False),
    "n_max": (int, 16, False),
    "half_width": (int, 32, False),
    "pad": (int, -1, False),
    "n_samples": (int, 10_000, False),
    "seed": (int, 0, False),
    "threads": (int, 1, False),
}


def cmd_decay(cfg: dict, fmt: str, out: str | None) -> int:
    topology = _lookup(_TOPOLOGIES, cfg["topology"], "topology")
    pad = None if cfg["pad"] < 0 else cfg["pad"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", estimators.SupercriticalWarning)
        if cfg["kind"] == "range":
            fit = estimators.fit_dependence_decay(
                topology, cfg["p"], cfg["n_max"], cfg["n_samples"], cfg["seed"],
                threads=cfg["threads"], pad=pad,
            )
        elif cfg["kind"] == "size":
            fit = estimators.fit_cluster_size_decay(
                topology, cfg["p"], cfg["r"], cfg["n_max"], cfg["n_samples"],
                cfg["seed"], threads=cfg["threads"],
                half_width=cfg["half_width"], pad=pad,
            )
        else:
            raise UsageError(f"unknown decay kind {cfg['kind']!r}")
    columns = ["kind", "n", "survival", "slope", "intercept", "r_squared",
               "censored_fraction", "n_samples", "seed"]
    rows = [
        [cfg["kind"], int(n), float(s), fit.slope, fit.intercept, fit.r_squared,
         fit.censored_fraction, fit.n_samples, fit.seed]
        for n, s in zip(fit.ns, fit.survival)
    ]
    _emit(out, _table(cfg, columns, rows, fmt))
    return 0


# --- sample ----------------------------------------------------------------

_SAMPLE_SCHEMA = {
    "topology": (str, "square", False),
    "p": (float, None, True),
    "n": (int, 16, False),
    "aspect": (int, 1, False),
    "pad": (int, -1, False),
    "seed": (int, 0, False),
}


def cmd_sample(cfg: dict, fmt: str, out: str | None) -> int:
    if not out:
        raise UsageError("sample needs --out for the binary dump")
    topology = _lookup(_TOPOLOGIES, cfg["topology"], "topology")
    pad = None if cfg["pad"] < 0 else cfg["pad"]
    rect = RectRegion(0, cfg["n"], 0, cfg["n"] * cfg["aspect"])
    window = Window.around(rect, pad)
    b = sample_bonds(topology, window, cfg["p"], cfg["seed"])
    dump_bonds(b, out)
    for line in _header(cfg):
        sys.stdout.write(line + "\n")
    sys.stdout.write(
        f"wrote {out}: {b.states.size} edges, open fraction {b.open_fraction()!r}\n"
    )
    return 0


# --- verify ----------------------------------------------------------------

_VERIFY_SCHEMA = {
    "seed": (int, 0, False),
    "threads": (int, 1, False),
}


def _verify_checks(seed: int, threads: int):
    """Yield (name, ok, detail) tuples; keep each check under a second or two."""
    from .bonds import label_clusters
    from .colouring import assign_colours
    from .connectivity import has_circuit_in_annulus

    for topo_name, topology in _TOPOLOGIES.items():
        rep = exhaustive_selfdual_check(topology, max_vertices=10)
        detail = f"{rep.n_colourings} colourings over {rep.n_rects} rects"
        if not rep.ok:
            rect, mask = rep.failures[0]
            detail += f"; first failure rect={rect} colour_mask={mask:#x}"
        yield f"crossing-dichotomy-{topo_name}", rep.ok, detail

    window = Window(RectRegion(0, 2, 0, 2), 0)
    spec = CrossingSpec(RectRegion(0, 2, 0, 2), Direction.VERTICAL, Colour.BLACK,
                        AdjacencyMode.ORDINARY)
    for p in (Fraction(0), Fraction(1, 2)):
        rep = russo_check(
            Topology.SQUARE, window, p, CrossingEvent(spec),
            [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)], method="oracle",
        )
        ok = rep.max_abs_gap == 0
        yield (
            f"derivative-identity-p={p}",
            ok,
            f"max |dP/dr - E[pivotal]| = {rep.max_abs_gap!r}",
        )

    a = AnnulusRegion(0, 0, 1)
    window_a = Window(a.outer_rect, 0)
    mismatches = 0
    checked = 0
    rng = np.random.default_rng(seed)
    verts = a.vertices()
    for _ in range(128):
        mask = rng.integers(0, 2, size=len(verts)).astype(bool)
        blacks = {v for v, m in zip(verts, mask) if m}
        b = sample_bonds(Topology.SQUARE, window_a, 0.0, seed)
        x = assign_colours(label_clusters(b), 0.5, seed)
        x.overrides.update(
            {x.clusters.cluster_of(v): (v in blacks) for v in verts}
        )
        for colour_ in (Colour.BLACK, Colour.WHITE):
            for mode in (AdjacencyMode.ORDINARY, AdjacencyMode.STAR):
                got = has_circuit_in_annulus(x, a, colour_, mode)
                want = brute_force_circuit(blacks, a, colour_, mode, Topology.SQUARE)
                checked += 1
                if got != want:
                    mismatches += 1
        if mismatches:
            break
    yield "circuit-dual-rule", mismatches == 0, f"{checked} decisions compared"

    ev = CrossingEvent(spec)
    e1 = estimators.estimate_event_prob(
        Topology.SQUARE, Window.around(RectRegion(0, 4, 0, 4), 4), 0.3, 0.6, ev,
        2000, seed, threads=1,
    )
    e2 = estimators.estimate_event_prob(
        Topology.SQUARE, Window.around(RectRegion(0, 4, 0, 4), 4), 0.3, 0.6, ev,
        2000, seed, threads=max(threads, 4),
    )
    yield (
        "thread-count-invariance",
        e1 == e2,
        f"value={e1.value!r} at 1 thread vs {e2.value!r} at {max(threads, 4)}",
    )


def cmd_verify(cfg: dict, fmt: str, out: str | None) -> int:
    lines = []
    all_ok = True
    for name, ok, detail in _verify_checks(cfg["seed"], cfg["threads"]):
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    text = "\n".join(_header(cfg) + lines) + "\n"
    _emit(out, text)
    return 0 if all_ok else 2


# --- entry point -----------------------------------------------------------

_COMMANDS = {
    "estimate": (_ESTIMATE_SCHEMA, cmd_estimate),
    "rc": (_RC_SCHEMA, cmd_rc),
    "decay": (_DECAY_SCHEMA, cmd_decay),
    "verify": (_VERIFY_SCHEMA, cmd_verify),
    "sample": (_SAMPLE_SCHEMA, cmd_sample),
}


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="dacperc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name, add_help=True)
        sp.add_argument("pairs", nargs="*", metavar="key=value")
        sp.add_argument("--config", default=None, help="JSON file with key/value settings")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=None, help="write output here instead of stdout")
        sp.add_argument("--format", default="csv", choices=("csv", "json"))
    try:
        args = parser.parse_args(argv)
        schema, runner = _COMMANDS[args.command]
        flags = {}
        if "seed" in schema:
            flags["seed"] = args.seed
        if "threads" in schema:
            flags["threads"] = args.threads
        cfg = _resolve(schema, args.config, args.pairs, flags)
        return runner(cfg, args.format, args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
