"""``delaylab`` command line.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import chaintrick, criteria, spectral, stepper, zoo
from .core import DelaySystem, HistoryFunction
from .errors import ConfigurationError, DelayLabError, NumericFailure

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


# --- output formatting ------------------------------------------------------

def fmt(x) -> str:
    return format(float(x), ".17g")


def dumps(obj, indent=0) -> str:
    """JSON with every float written to 17 significant digits (NaN/inf become null)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating, Fraction)):
        v = float(obj)
        return fmt(v) if math.isfinite(v) else "null"
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag])
    return json.dumps(str(obj))


def _complex(z):
    return {"re": z.real, "im": z.imag}


def write_csv(stream, times, values, header=None):
    n = values.shape[1]
    header = header or ["t"] + [f"x{i + 1}" for i in range(n)]
    stream.write(",".join(header) + "\n")
    for t, row in zip(times, values):
        stream.write(",".join([fmt(t)] + [fmt(v) for v in row]) + "\n")


# --- model resolution -------------------------------------------------------

def _parse_params(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"--param expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigurationError(f"--param {key}: {value!r} is not a number") from None
    return out


def load_model_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigurationError(f"cannot read model file {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"model file {path} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError("model file must hold a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported schema_version {doc.get('schema_version')!r} (expected {SCHEMA_VERSION})")
    if "model" not in doc:
        raise ConfigurationError("model file has no 'model' entry")
    return doc


def _linear_system(d):
    """Inline ``x' = A0 x + sum_k A_k x(t - tau_k)``."""
    A0 = np.atleast_2d(np.asarray(d["A0"], dtype=float))
    n = A0.shape[0]
    terms = sorted(((float(t["tau"]), np.asarray(t["A"], dtype=float).reshape(n, n))
                    for t in d.get("terms", ())), key=lambda p: p[0])
    delays = tuple(t for t, _ in terms)
    mats = [A for _, A in terms]

    def rhs(t, x, delayed):
        out = A0 @ x
        for A, xd in zip(mats, delayed):
            out = out + A @ xd
        return out

    return DelaySystem(n, delays, rhs, linearizable=True, name="linear")


def _lv(d):
    return chaintrick.LotkaVolterraDistributed(d["b"], d["A"], d["B"], d["alpha"])


class Resolved:
    """A model ready to simulate or analyze."""

    def __init__(self, system, history, steady_state=None, characteristic=None, spec=None,
                 options=None, describe=None):
        self.system = system
        self.history = history
        self.steady_state = steady_state
        self.characteristic = characteristic
        self.spec = spec
        self.options = options or {}
        self.describe = describe or {"name": system.name}


def resolve(args) -> Resolved:
    params = _parse_params(getattr(args, "param", None))
    if getattr(args, "model_file", None):
        doc = load_model_file(args.model_file)
        model = doc["model"]
        params = {**{k: float(v) for k, v in doc.get("params", {}).items()}, **params}
        options = doc.get("options", {})
        hist = doc.get("history")
        try:
            return _resolve_doc(model, params, hist, options)
        except (KeyError, TypeError) as err:
            raise ConfigurationError(f"malformed model file: missing or invalid {err}") from None
    if not getattr(args, "model", None):
        raise ConfigurationError("give --model NAME or --model-file PATH")
    spec = zoo.make_model(args.model, params)
    return Resolved(spec.system, spec.default_history, spec.steady_state,
                    spec.characteristic, spec, describe={"name": spec.name, "params": spec.parameters})


def _resolve_doc(model, params, hist, options):
    if isinstance(model, str):
        spec = zoo.make_model(model, params)
        history = spec.default_history
        if hist is not None:
            history = HistoryFunction.from_dict(hist, spec.system.dimension)
        return Resolved(spec.system, history, spec.steady_state, spec.characteristic, spec,
                        options, {"name": spec.name, "params": spec.parameters})
    kind = model.get("type")
    if kind == "linear":
        system = _linear_system(model)
        history = (HistoryFunction.from_dict(hist, system.dimension) if hist is not None
                   else HistoryFunction.constant(np.ones(system.dimension), -system.tau_max))
        return Resolved(system, history, np.zeros(system.dimension), options=options,
                        describe={"name": "linear"})
    if kind in ("lv_distributed", "lv_reduced"):
        m = _lv(model)
        system = chaintrick.reduce_exponential_kernel(m)
        try:
            x_star = chaintrick.reduced_steady_state(m)
        except DelayLabError:
            x_star = None
        if hist is None:
            raise ConfigurationError(f"{kind} model files need a history")
        if kind == "lv_distributed":
            history = chaintrick.reduced_history(m, HistoryFunction.from_dict(hist, m.n))
        else:
            history = HistoryFunction.from_dict(hist, 2 * m.n)
        return Resolved(system, history, x_star, options=options, describe={"name": kind})
    raise ConfigurationError(f"unknown inline model type {kind!r}")


def _option(args, name, options, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return options.get(name, default)


def _window(args, options):
    w = dict(options.get("window", {}))
    for key in ("re_min", "re_max", "im_max"):
        v = getattr(args, key, None)
        if v is not None:
            w[key] = v
    return spectral.RootWindow(**w) if w else spectral.DEFAULT_WINDOW


def _linearization(res: Resolved):
    if res.steady_state is None:
        raise ConfigurationError("model has no steady state to linearize about")
    return spectral.linearize_at(res.system, res.steady_state)


def _model_tau(res: Resolved):
    if res.spec is None:
        return None
    p = res.spec.parameters
    for key in ("tau", "tau1", "tau11"):
        if key in p:
            return p[key]
    return None


# --- subcommands ------------------------------------------------------------

def cmd_simulate(args, out):
    res = resolve(args)
    o = res.options
    step = _option(args, "step", o)
    t_end = _option(args, "t_end", o)
    if step is None or t_end is None:
        raise ConfigurationError("simulate needs --step and --t-end")
    opts = stepper.IntegratorOptions(float(step), float(t_end),
                                     int(_option(args, "breakpoint_order", o,
                                                 stepper.DEFAULT_BREAKPOINT_ORDER)))
    tr = stepper.integrate(res.system, res.history, opts)
    dt = float(_option(args, "output_step", o, step))
    if not dt > 0:
        raise ConfigurationError("output step must be positive")
    n = max(1, int(round(opts.t_end / dt)))
    ts = np.linspace(0.0, opts.t_end, n + 1)
    values = tr(ts)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(fh, ts, values)
    else:
        write_csv(out, ts, values)
    return EXIT_OK


def cmd_analyze(args, out):
    res = resolve(args)
    window = _window(args, res.options)
    if res.characteristic is not None:
        tau = args.tau if args.tau is not None else _model_tau(res)
        if tau is None:
            raise ConfigurationError("give --tau for this model")
        q = res.characteristic(float(tau))
    else:
        q = _linearization(res)
    result = spectral.rightmost_root(q, window)
    report = {
        "model": res.describe,
        "steady_state": None if res.steady_state is None else list(res.steady_state),
        "characteristic": q.to_dict(),
        "window": window.to_dict(),
        "rightmost_roots": [_complex(z) for z in result.tied],
        "max_real_part": result.max_real,
        "roots": [_complex(z) for z in result.roots],
        "right_edge_clear": result.right_edge_clear,
        "neutral": q.is_neutral,
        "verdict": result.verdict.to_dict(),
    }
    out.write(dumps(report) + "\n")
    return EXIT_OK


def cmd_hopf(args, out):
    hp = spectral.hopf_point_scalar(args.a, args.b)
    out.write(dumps(hp.to_dict(args.family)) + "\n")
    return EXIT_OK


def cmd_sweep(args, out):
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise ConfigurationError("give both --a and --b")
        a, b = args.a, args.b

        def builder(tau):
            return spectral.linear_scalar_characteristic(a, b, tau)
        window = _window(args, {})
        describe = {"name": "linear_scalar", "params": {"a": a, "b": b}}
    else:
        res = resolve(args)
        builder = res.characteristic
        if builder is None:
            raise ConfigurationError("this model has no delay-parameterized characteristic")
        window = _window(args, res.options)
        describe = res.describe
    scan = spectral.stability_switch_scan(builder, (args.tau_min, args.tau_max), args.grid, window)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            write_csv(fh, scan.taus, scan.sigma[:, None], ["tau", "max_real_part"])
    report = {"model": describe, "tau_range": [args.tau_min, args.tau_max], "grid": args.grid,
              "window": window.to_dict(),
              "events": [e.to_dict() for e in scan.events], "warnings": list(scan.warnings)}
    out.write(dumps(report) + "\n")
    return EXIT_OK


def cmd_reduce(args, out):
    doc = load_model_file(args.model_file)
    model = doc["model"]
    if not isinstance(model, dict) or model.get("type") != "lv_distributed":
        raise ConfigurationError("reduce needs an inline lv_distributed model")
    try:
        m = _lv(model)
        hist = HistoryFunction.from_dict(doc["history"], m.n)
    except (KeyError, TypeError) as err:
        raise ConfigurationError(f"malformed model file: missing or invalid {err}") from None
    n = m.n
    try:
        steady = list(chaintrick.reduced_steady_state(m))
    except DelayLabError as err:
        steady, note = None, str(err)
    else:
        note = ""
    reduced = {
        "schema_version": SCHEMA_VERSION,
        "model": {"type": "lv_reduced", "b": m.b.tolist(), "A": m.A.tolist(), "B": m.B.tolist(),
                  "alpha": m.alpha},
        "equations": {
            "dimension": 2 * n,
            "growth": [f"x{i + 1}' = x{i + 1} (b{i + 1} + sum_j A[{i}][j] x_j"
                       f" + sum_j B[{i}][j] x_{{{n}+j}})" for i in range(n)],
            "auxiliary": [f"x{n + j + 1}' = alpha (x{j + 1} - x{n + j + 1})" for j in range(n)],
        },
        "history": chaintrick.reduced_history(m, hist).to_dict(),
        "steady_state": steady,
        "options": doc.get("options", {}),
    }
    if note:
        reduced["steady_state_note"] = note
    text = dumps(reduced) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number") from None


def cmd_check(args, out):
    which = args.criterion
    if which == "hutchinson":
        v = criteria.hutchinson_global_test(args.gamma, args.tau)
    elif which == "stepan":
        if args.theta:
            atoms = [(th, w) for th, w in zip(args.theta, args.weight or ())]
            if len(atoms) != len(args.theta) or len(args.theta) != len(args.weight or ()):
                raise ConfigurationError("--theta and --weight need equal lengths")
            v = criteria.stepan_distributed(args.a0, args.a1, criteria.DiscreteMeasure(atoms))
        else:
            v = criteria.stepan_discrete(args.a0, args.a1, args.b or (), args.delay or ())
    elif which == "cooperative":
        v = criteria.cooperative_absolute_test(args.r, args.k, args.alpha)
    elif which == "routh":
        v = spectral.routh_hurwitz_2(args.p, args.q)
    elif which == "competition":
        spec = zoo.make_model("competition", _parse_params(args.param))
        lo, hi = args.probe_box
        e = spec.extras
        v = criteria.competition_delay_independent_test(
            e["b1"], e["b2"], e["m1"], e["m2"], spec.steady_state, ((lo, hi), (lo, hi)))
    else:  # argparse restricts choices
        raise ConfigurationError(f"unknown criterion {which}")
    out.write(dumps(v.to_dict()) + "\n")
    return EXIT_OK


def cmd_oscillation(args, out):
    v = criteria.oscillation_test_linear(args.a, args.tau)
    doc = v.to_dict()
    if args.empirical:
        spec = zoo.make_model("linear_scalar", {"a": 0.0, "b": args.a, "tau": args.tau})
        t_end = 80 * args.tau
        tr = stepper.integrate(spec.system, spec.default_history,
                               stepper.IntegratorOptions(args.tau / 20, t_end))
        doc["empirical"] = stepper.classify_oscillation_empirical(
            tr, 0.0, 5 * args.tau, zero_tol=0.0).to_dict()
    out.write(dumps(doc) + "\n")
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def _model_args(p, file_only=False):
    p.add_argument("--model-file", metavar="PATH", help="JSON model file (schema_version 1)")
    if not file_only:
        p.add_argument("--model", choices=zoo.MODEL_NAMES, help="named model")
        p.add_argument("--param", action="append", metavar="KEY=VALUE",
                       help="model parameter (repeatable)")


def _window_args(p):
    p.add_argument("--re-min", dest="re_min", type=float)
    p.add_argument("--re-max", dest="re_max", type=float)
    p.add_argument("--im-max", dest="im_max", type=float)


def build_parser():
    parser = _ArgumentParser(prog="delaylab", description="Delay differential equation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("simulate", help="integrate a model and print a CSV trajectory")
    _model_args(p)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--output-step", dest="output_step", type=float,
                   help="spacing of CSV rows (default: --step)")
    p.add_argument("--breakpoint-order", dest="breakpoint_order", type=int)
    p.add_argument("--csv", metavar="PATH", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="rightmost characteristic roots at a steady state")
    _model_args(p)
    _window_args(p)
    p.add_argument("--tau", type=float, help="delay for delay-parameterized models")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("hopf", help="Hopf point of x' + a x + b x(t - tau) = 0")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--family", type=int, default=4, help="number of crossing delays to list")
    p.set_defaults(func=cmd_hopf)

    p = sub.add_parser("sweep", help="scan the delay for stability switches")
    _model_args(p)
    _window_args(p)
    p.add_argument("--a", type=float, help="linear scalar model coefficient")
    p.add_argument("--b", type=float, help="linear scalar model delayed coefficient")
    p.add_argument("--tau-min", dest="tau_min", type=float, default=0.0)
    p.add_argument("--tau-max", dest="tau_max", type=float, required=True)
    p.add_argument("--grid", type=int, default=61)
    p.add_argument("--csv", metavar="PATH", help="write (tau, max real part) rows here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reduce", help="chain-trick reduction of an lv_distributed model file")
    p.add_argument("--model-file", required=True, metavar="PATH")
    p.add_argument("--output", "-o", metavar="PATH", help="write the reduced model file here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("check", help="closed-form stability criteria")
    p.add_argument("criterion", choices=("hutchinson", "stepan", "cooperative", "routh",
                                         "competition"))
    p.add_argument("--gamma", type=_fraction)
    p.add_argument("--tau", type=_fraction)
    p.add_argument("--a0", type=float)
    p.add_argument("--a1", type=float)
    p.add_argument("--b", type=float, nargs="+")
    p.add_argument("--delay", type=float, nargs="+")
    p.add_argument("--theta", type=float, nargs="+", help="atom locations (distributed case)")
    p.add_argument("--weight", type=float, nargs="+", help="atom weights (distributed case)")
    p.add_argument("--r", type=float, nargs=2)
    p.add_argument("--k", type=float, nargs=2)
    p.add_argument("--alpha", type=float, nargs=2)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="competition model parameter (repeatable)")
    p.add_argument("--probe-box", dest="probe_box", type=float, nargs=2, default=(0.0, 2.0),
                   metavar=("LO", "HI"))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oscillation", help="oscillation test for x' + a x(t - tau) = 0")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--empirical", action="store_true",
                   help="also simulate and classify the zero crossings")
    p.set_defaults(func=cmd_oscillation)
    return parser


_REQUIRED_CHECK = {
    "hutchinson": ("gamma", "tau"),
    "stepan": ("a0", "a1"),
    "cooperative": ("r", "k", "alpha"),
    "routh": ("p", "q"),
    "competition": ("param",),
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "check":
            missing = [k for k in _REQUIRED_CHECK[args.criterion] if getattr(args, k) is None]
            if missing:
                raise ConfigurationError(
                    f"check {args.criterion} needs " + ", ".join("--" + m for m in missing))
        return args.func(args, out)
    except ConfigurationError as e:
        err.write(f"delaylab: configuration error: {e}\n")
        return EXIT_CONFIG
    except NumericFailure as e:
        err.write(f"delaylab: numeric failure: {e}\n")
        return EXIT_NUMERIC


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
