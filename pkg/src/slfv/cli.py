"""Command-line front end.

    slfv params   --config cfg.json --out DIR
    slfv wmf      ...
    slfv dual     ...     (mode "ibd" or "hazard")
    slfv forward  ...
    slfv qv       ...
    slfv gencheck ...

Each command reads one JSON config (missing keys take the defaults below),
writes its artifacts to --out, and embeds the config hash and seed in
every file.  Randomness flows from the master seed through
(seed, command, block or replicate) streams, so --threads never changes
the output bytes.
"""

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import dual_sim, forward_sim, kernels, regimes, testfunctions
from .regimes import RegimeParams
from .rng import stream

CRIT6_REGIME = {"kind": "OneTail", "d": 1, "u0": 0.5, "mu": 0.2, "a": 1.5, "b": 1.0, "c": 0.0}

DEFAULTS = {
    "params": {
        "regime": {"kind": "OneTail", "d": 2, "u0": 1.0, "mu": 0.2, "a": 1.5, "b": 1.0, "c": 0.7},
        "N": 1000, "delta": None, "theta": 1.0 / 3.0, "zeta_convention": "dynamics",
    },
    "wmf": {
        "d": 2, "mu": 0.2,
        "curves": [{"alpha": 1.5, "beta": 1.5}, {"alpha": 1.5, "beta": 2.2},
                   {"alpha": 2.0, "beta": 2.2}, {"alpha": 2.0, "beta": 3.0}],
        "r": {"min": 0.5, "max": 20.0, "n": 40, "spacing": "log"},
        "normalize_at": 3.0,
    },
    "dual": {
        "mode": "ibd", "regime": CRIT6_REGIME, "N": 1000, "delta": 0.1, "t": 10.0,
        "reps": 100000, "block_size": 8192,
        "phi": {"kind": "uniform", "lo": [-1.5], "hi": [-0.5]},
        "psi": {"kind": "uniform", "lo": [0.5], "hi": [1.5]},
        "compare": True, "log": False,
    },
    "forward": {
        "regime": {"kind": "OneTail", "d": 2, "u0": 0.8, "mu": 0.2, "a": 2.6, "b": 2.0, "c": 0.0},
        "N": 1, "delta": 0.5, "mode": "TwoAllele", "L": 60.0, "grid": 120,
        "init": {"kind": "TwoAlleleBall", "center": [30.0, 30.0], "radius": 12.0},
        "times": [0.0, 0.05, 0.1],
    },
    "qv": {
        "regime": CRIT6_REGIME, "Ns": [100, 1000], "theta": 1.0 / 3.0, "L": 20.0,
        "phi": {"kind": "bump", "center": [10.0], "radius": 2.0},
        "psi": {"kind": "indicator", "lo": 0.0, "hi": 0.5},
        "t": 0.02, "reps": {"100": 100, "1000": 16}, "mutation": True, "grid": None,
    },
    "gencheck": {
        "regime": {"kind": "OneTail", "d": 1, "u0": 0.5, "mu": 0.2, "a": 1.5, "b": 0.0, "c": 0.0},
        "phi": {"kind": "gaussian_density", "center": [0.0], "width": 1.0},
        "deltas": [0.2, 0.1, 0.05, 0.025],
        "x": {"min": -5.0, "max": 5.0, "n": 21},
    },
}


class ConfigError(ValueError):
    pass


# config handling

def merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("regime", "phi", "psi", "init", "reps"):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve_config(command, user=None, seed=None):
    user = dict(user or {})
    unknown = sorted(set(user) - set(DEFAULTS[command]) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    cfg = merge(DEFAULTS[command], user)
    cfg["seed"] = int(seed if seed is not None else user.get("seed", 0))
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def config_hash(cfg):
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def regime_from(cfg):
    return regimes.from_dict(RegimeParams, cfg["regime"])


def _schedule(p, cfg, N=None):
    N = cfg["N"] if N is None else N
    delta = cfg.get("delta")
    return regimes.schedule_for(p, N, delta=delta, theta=cfg.get("theta"))


def make_test_function(spec, d):
    kind = spec["kind"]
    if kind == "uniform":
        return testfunctions.uniform_block(spec["lo"], spec["hi"])
    if kind == "gaussian_density":
        return testfunctions.gaussian_density(d, spec.get("center", 0.0), spec.get("width", 1.0))
    if kind == "gaussian":
        return testfunctions.gaussian(d, spec.get("center", 0.0), spec.get("width", 1.0),
                                      spec.get("amplitude", 1.0))
    if kind == "bump":
        return testfunctions.bump(d, spec.get("center", 0.0), spec.get("radius", 1.0),
                                  spec.get("amplitude", 1.0))
    raise ConfigError(f"unknown test function kind {kind!r}")


def sampler(spec, d):
    kind = spec["kind"]
    if kind == "uniform":
        return dual_sim.uniform_block_sampler(spec["lo"], spec["hi"])
    if kind == "point":
        return dual_sim.point_sampler(spec["x"])
    if kind == "gaussian_density":
        return dual_sim.gaussian_sampler(spec.get("center", [0.0] * d), spec.get("width", 1.0))
    raise ConfigError(f"no sampler for density kind {kind!r}")


def type_function(spec):
    kind = spec["kind"]
    if kind == "indicator":
        return forward_sim.type_indicator(spec["lo"], spec["hi"])
    if kind == "constant":
        return forward_sim.type_constant(spec.get("value", 1.0))
    raise ConfigError(f"unknown type function kind {kind!r}")


def _type_l2(spec):
    if spec["kind"] == "indicator":
        w = spec["hi"] - spec["lo"]
        return w - w * w
    return 0.0


def _r_grid(spec):
    if "values" in spec:
        r = np.asarray(spec["values"], dtype=float)
    elif spec.get("spacing", "log") == "log":
        r = np.geomspace(spec["min"], spec["max"], spec["n"])
    else:
        r = np.linspace(spec["min"], spec["max"], spec["n"])
    if np.any(r <= 0):
        raise ConfigError("r grid must be strictly positive")
    return r


# output

def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, float) and not np.isfinite(v):
        return None
    return v


def json_text(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def csv_text(header, rows, meta):
    buf = io.StringIO()
    for k in sorted(meta):
        buf.write(f"# {k}={meta[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _meta(cfg, command):
    return {"command": command, "config_hash": config_hash(cfg), "seed": cfg["seed"]}


def _estimate_dict(e):
    return {"estimate": e.estimate, "se": e.se, "ci_low": e.ci_low, "ci_high": e.ci_high,
            "reps": e.reps, "successes": e.successes}


# commands

def cmd_params(cfg, out, threads=1):
    p = regime_from(cfg)
    dp = regimes.derive_params(p, cfg.get("zeta_convention", "dynamics"))
    body = {"meta": _meta(cfg, "params"), "regime": regimes.to_dict(p),
            "derived": regimes.to_dict(dp),
            "gamma_branch": regimes.gamma_branch(dp.beta, p.d)}
    theta = cfg.get("theta")
    if cfg.get("N") is not None:
        delta = cfg.get("delta") or float(cfg["N"]) ** (-theta)
        body["schedule"] = regimes.to_dict(regimes.rescaled_rates(p, dp, cfg["N"], delta, theta))
    if theta is not None:
        body["validity"] = regimes.to_dict(regimes.check_asymptotics(p, theta))
    write(out, "params.json", json_text(body))
    return body


def cmd_wmf(cfg, out, threads=1):
    d, mu = cfg["d"], cfg["mu"]
    r = _r_grid(cfg["r"])
    cols, names = [], []
    for c in cfg["curves"]:
        if "regime" in c:
            p = regimes.from_dict(RegimeParams, c["regime"])
            dp = regimes.derive_params(p)
        else:
            dp = kernels.unit_diffusivity_params(c["alpha"], c["beta"], d, c.get("gamma", 1.0))
        F = kernels.wm_function(dp, d, mu, r)
        if cfg.get("normalize_at"):
            F = F / kernels.wm_function(dp, d, mu, cfg["normalize_at"])
        cols.append(F)
        names.append(f"F_alpha{dp.alpha:g}_beta{dp.beta:g}")
    rows = [[ri] + [col[i] for col in cols] for i, ri in enumerate(r)]
    meta = _meta(cfg, "wmf")
    meta.update(d=d, mu=mu, normalize_at=cfg.get("normalize_at"))
    write(out, "wmf.csv", csv_text(["r"] + names, rows, meta))
    return {"r": r, "columns": dict(zip(names, cols))}


def cmd_dual(cfg, out, threads=1):
    p = regime_from(cfg)
    dp, sched = _schedule(p, cfg)
    seed = cfg["seed"]
    body = {"meta": _meta(cfg, "dual"), "mode": cfg["mode"], "schedule": regimes.to_dict(sched)}
    if cfg["mode"] == "hazard":
        est = dual_sim.coincident_hazard(seed, p, sched, cfg["reps"], threads=threads,
                                         block_size=cfg["block_size"])
        exact = dual_sim.coincident_hazard_exact(p, sched)
        body.update(_estimate_dict(est), exposure=est.extra["exposure"], formula=exact,
                    z=(est.estimate - exact) / est.se)
    elif cfg["mode"] == "ibd":
        est, log = dual_sim.estimate_ibd(seed, sampler(cfg["phi"], p.d), sampler(cfg["psi"], p.d),
                                         cfg["t"], p, sched, cfg["reps"], threads=threads,
                                         block_size=cfg["block_size"], return_log=True)
        body.update(_estimate_dict(est))
        if cfg.get("compare"):
            formula = kernels.wm_pairing(dp, p.d, p.mu, make_test_function(cfg["phi"], p.d),
                                         make_test_function(cfg["psi"], p.d))
            body.update(formula=formula, z=(est.estimate - formula) / est.se)
        if cfg.get("log"):
            names = dual_sim.OUTCOME_NAMES
            rows = []
            for i in range(len(log["outcome"])):
                o = int(log["outcome"][i])
                ct = log["time"][i] / sched.time_factor if o == dual_sim.COAL else ""
                rows.append([i, names.get(o, "survived"), ct, int(log["n_events"][i])])
            write(out, "dual_replicates.csv",
                  csv_text(["rep", "outcome", "coal_time", "n_events"], rows, _meta(cfg, "dual")))
    else:
        raise ConfigError(f"unknown dual mode {cfg['mode']!r}")
    write(out, "dual.json", json_text(body))
    return body


def cmd_forward(cfg, out, threads=1):
    p = regime_from(cfg)
    dp, sched = _schedule(p, cfg)
    init_spec = dict(cfg["init"])
    kind = init_spec.pop("kind")
    init = {"TwoAlleleBall": lambda: forward_sim.TwoAlleleBall(tuple(init_spec["center"]),
                                                               init_spec["radius"]),
            "ConstantFrequency": lambda: forward_sim.ConstantFrequency(init_spec["w"]),
            "UniformLebesgue": forward_sim.UniformLebesgue}[kind]()
    field = forward_sim.new_field(cfg["mode"], cfg["L"], cfg["grid"], init, d=p.d)
    times = sorted(float(t) for t in cfg["times"])
    obs = forward_sim.snapshot_observer(times)
    rng = stream(cfg["seed"], "forward")
    field, log = forward_sim.run_forward(rng, field, p, sched, times[-1] if times else 0.0, [obs])
    files = []
    for k, (t, grid) in enumerate(obs.values):
        meta = _meta(cfg, "forward")
        meta.update(L=cfg["L"], grid=cfg["grid"], time=repr(float(t)))
        g = grid.reshape(grid.shape[0], -1) if grid.ndim > 1 else grid[None, :]
        header = [f"c{j}" for j in range(g.shape[1])]
        files.append(write(out, f"snapshot_{k:03d}.csv", csv_text(header, g.tolist(), meta)))
    body = {"meta": _meta(cfg, "forward"), "regime": regimes.to_dict(p),
            "schedule": regimes.to_dict(sched), "truncation_radius": log.truncation_radius,
            "event_rate": log.event_rate, "event_count": log.n_events,
            "snapshots": [os.path.basename(f) for f in files], "times": times}
    write(out, "forward.json", json_text(body))
    return body


def cmd_qv(cfg, out, threads=1):
    p = regime_from(cfg)
    phi = make_test_function(cfg["phi"], p.d)
    psi = type_function(cfg["psi"])
    l2 = _type_l2(cfg["psi"])
    results = []
    for N in cfg["Ns"]:
        dp, sched = regimes.schedule_for(p, N, theta=cfg["theta"])
        reps = cfg["reps"][str(N)] if isinstance(cfg["reps"], dict) else cfg["reps"]
        est = forward_sim.empirical_qv(cfg["seed"], p, sched, phi, psi, cfg["t"], reps,
                                       L=cfg["L"], grid=cfg.get("grid"), threads=threads,
                                       mutation=cfg["mutation"], stream_key=N)
        q = kernels.q_pairing(dp, p.d, phi, l2)
        pre = forward_sim.prelimit_qv_rate(p, sched, phi, l2, s_max=cfg["L"] / 2)
        t = cfg["t"]
        results.append({"N": N, "delta": sched.delta, "reps": reps,
                        "qv_rate": est.estimate / t, "qv_rate_se": est.se / t,
                        "q_pairing": q, "prelimit_rate": pre,
                        "rel_error": abs(est.estimate / t - q) / q,
                        "mean_events": est.extra["mean_events"]})
    body = {"meta": _meta(cfg, "qv"), "results": results}
    write(out, "qv.json", json_text(body))
    return body


def cmd_gencheck(cfg, out, threads=1):
    p = regime_from(cfg)
    dp = regimes.derive_params(p)
    spec = kernels.kernel_spec(dp, p.d)
    phi = make_test_function(cfg["phi"], p.d)
    xs = np.linspace(cfg["x"]["min"], cfg["x"]["max"], cfg["x"]["n"])
    D = np.array([kernels.apply_D_alpha(spec, phi, x) for x in xs])
    errors, rows = [], []
    for delta in cfg["deltas"]:
        L = np.array([kernels.apply_L_N(p, dp, delta, phi, x) for x in xs])
        errors.append(float(np.max(np.abs(L - D))))
        rows.extend([delta, x, l, dv] for x, l, dv in zip(xs, L, D))
    body = {"meta": _meta(cfg, "gencheck"), "deltas": cfg["deltas"], "sup_errors": errors,
            "strictly_decreasing": bool(all(b < a for a, b in zip(errors, errors[1:])))}
    write(out, "gencheck.json", json_text(body))
    write(out, "gencheck.csv", csv_text(["delta", "x", "L_N", "D_alpha"], rows,
                                        _meta(cfg, "gencheck")))
    return body


COMMANDS = {"params": cmd_params, "wmf": cmd_wmf, "dual": cmd_dual, "forward": cmd_forward,
            "qv": cmd_qv, "gencheck": cmd_gencheck}


def run(command, config=None, seed=None, out=".", threads=1):
    """Programmatic entry point: resolve the config, run, return the result body."""
    cfg = resolve_config(command, config, seed)
    return COMMANDS[command](cfg, out, threads=threads)


def build_parser():
    ap = argparse.ArgumentParser(prog="slfv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    user = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            user = json.load(fh)
    try:
        body = run(args.command, user, args.seed, args.out, args.threads)
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        field = msg.split(":", 1)[0] if ":" in msg else None
        sys.stderr.write(json_text({"error": {"field": field, "message": msg}}))
        return 2
    if args.command in ("params", "dual", "qv", "gencheck"):
        sys.stdout.write(json_text(body))
    return 0


if __name__ == "__main__":
    sys.exit(main())
