"""Command-line front end: verify | closure | simulate | compare.

Every subcommand produces a Report (JSON schema 1) and exits 0 iff all
checks passed. Simulation/config schema is documented in docs/config.md.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bracket, sim
from .closures import (BurbyClosure, ClosureFamily, ColdClosure,
                       FourFieldClosure, GenericClosure, Metric,
                       MultiDeltaClosure, WaterbagClosure, burby_invert,
                       burby_mu, burby_mu_closed, equation_of_state,
                       waterbag_s)
from .moments import alpha_beta_in_mu
from .poly import MultiPoly


class Report:
    def __init__(self, command: str):
        self.command = command
        self.checks: list[dict] = []
        self._t0 = time.perf_counter()

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append({"name": name, "ok": bool(ok), "detail": detail})

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    def as_dict(self) -> dict:
        return {"schema": 1, "command": self.command, "ok": self.ok,
                "checks": self.checks,
                "wall_time": round(time.perf_counter() - self._t0, 3)}

    def emit(self, as_json: bool, out: Path | None = None) -> int:
        doc = self.as_dict()
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
        if as_json:
            print(json.dumps(doc, indent=2))
        else:
            for c in self.checks:
                mark = "PASS" if c["ok"] else "FAIL"
                line = f"[{mark}] {c['name']}"
                if c["detail"] and not c["ok"]:
                    line += f": {c['detail']}"
                print(line)
            print(f"{'OK' if self.ok else 'FAILED'} "
                  f"({sum(c['ok'] for c in self.checks)}/{len(self.checks)} checks)")
        return 0 if self.ok else 1


# ---------------------------------------------------------------------------
# Closure construction from flags / config
# ---------------------------------------------------------------------------


def _parse_fraction(s) -> Fraction:
    return Fraction(str(s))


def closure_from_spec(spec: dict) -> ClosureFamily:
    """Build a closure family from a config dict {'family': ..., params}."""
    spec = dict(spec)
    family = spec.pop("family", None)
    if family == "cold":
        _reject_unknown(spec, (), "closure")
        return ColdClosure()
    if family == "multidelta":
        _reject_unknown(spec, ("M",), "closure")
        return MultiDeltaClosure(int(spec["M"]))
    if family == "waterbag":
        _reject_unknown(spec, ("heights",), "closure")
        return WaterbagClosure([_parse_fraction(h) for h in spec["heights"]])
    if family == "burby":
        _reject_unknown(spec, ("level", "branch"), "closure")
        return BurbyClosure(int(spec["level"]), branch=spec.get("branch", "plus"))
    if family == "fourfield":
        _reject_unknown(spec, ("kappa",), "closure")
        return FourFieldClosure(_parse_fraction(spec["kappa"]))
    if family == "generic":
        _reject_unknown(spec, ("mu2", "metric"), "closure")
        mu2 = MultiPoly.parse(spec["mu2"])
        metric = _metric_from_spec(spec.get("metric"), mu2.nvars)
        if metric.dim < mu2.nvars:
            raise ValueError("metric smaller than the variable count of mu2")
        if metric.dim > mu2.nvars:
            mu2 = MultiPoly.parse(spec["mu2"],
                                  varnames=[f"nu{i + 1}" for i in range(metric.dim)])
        return GenericClosure(mu2, metric)
    raise ValueError(f"unknown closure family {family!r}")


def _metric_from_spec(text, nvars: int) -> Metric:
    if text is None:
        # default: antidiagonal ones
        rows = [[Fraction(1) if i + j == nvars - 1 else Fraction(0)
                 for j in range(nvars)] for i in range(nvars)]
        return Metric(rows)
    if isinstance(text, str):
        rows = [[_parse_fraction(v) for v in row.split(",")]
                for row in text.split(";")]
    else:
        rows = [[_parse_fraction(v) for v in row] for row in text]
    return Metric(rows)


def _reject_unknown(d: dict, allowed, where: str):
    extra = set(d) - set(allowed)
    if extra:
        raise ValueError(f"unknown {where} keys: {sorted(extra)}")


def _closure_from_args(args) -> ClosureFamily:
    spec = {"family": args.family}
    if args.family == "multidelta":
        spec["M"] = args.M if args.M else (args.level or 2)
    elif args.family == "waterbag":
        if not args.heights:
            raise ValueError("waterbag needs --heights")
        spec["heights"] = args.heights.split(",")
    elif args.family == "burby":
        spec["level"] = args.level or 2
        spec["branch"] = args.branch
    elif args.family == "fourfield":
        spec["kappa"] = args.kappa if args.kappa is not None else "0"
    elif args.family == "generic":
        if not args.mu2:
            raise ValueError("generic needs --mu2")
        spec["mu2"] = args.mu2
        if args.metric:
            spec["metric"] = args.metric
    return closure_from_spec(spec)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_one(closure: ClosureFamily, rep: Report):
    name = closure.name
    size = closure.nu_count
    if isinstance(closure, GenericClosure):
        size = closure.nu_count + 2  # generated closures need off-column cells
    fl = bracket.check_flatness(closure, size=size)
    detail = "; ".join(f"{c.name}: {c.residual}" for c in fl.failures()[:3])
    rep.add(f"{name}: flatness identities", fl.ok, detail)
    if closure.nu_count:
        hb = alpha_beta_in_mu(closure)
        rep.add(f"{name}: bracket antisymmetry",
                not hb.symmetry_residuals() and hb.is_antisymmetric)
        try:
            sig = closure.metric.signature
            rep.add(f"{name}: metric nondegenerate (signature {sig})", True)
        except ValueError as e:
            rep.add(f"{name}: metric nondegenerate", False, str(e))
    if isinstance(closure, WaterbagClosure):
        L = closure.Lambda
        ok = all(closure.gamma(n) ==
                 MultiPoly.const(closure.nu_count, L ** n) - n * L * closure.mu(n - 1)
                 for n in range(1, 2 * closure.N - 2))
        rep.add(f"{name}: gamma_n = Lambda^n - n Lambda mu_(n-1)", ok)
        ok = True
        for n in range(2, 2 * closure.N - 2):
            want = Fraction(1 + (-1) ** n,
                            (n + 1) * 2 ** (n + 1) * closure.heights[-1] ** n)
            ok = ok and waterbag_s(closure.heights, n).constant_term() == want
        rep.add(f"{name}: S_n constant terms", ok)
    if isinstance(closure, BurbyClosure):
        m = closure.m
        ok = all(burby_mu(m, n) == burby_mu_closed(m, n) for n in range(1, m + 1))
        rep.add(f"{name}: recursion equals closed form", ok)
        nu = [Fraction(k + 1, 2) * (-1) ** k for k in range(m)]
        if closure.branch == "minus":
            nu[-1] = -abs(nu[-1])
        else:
            nu[-1] = abs(nu[-1])
        mus = [closure.mu(n).eval(nu) for n in range(1, m + 1)]
        back = closure.invert([float(v) for v in mus])
        err = max(abs(b - float(v)) / max(abs(float(v)), 1e-30)
                  for b, v in zip(back, nu))
        rep.add(f"{name}: inversion round trip", err < 1e-12, f"rel err {err:.2e}")
    if closure.nu_count and not isinstance(closure, (WaterbagClosure, GenericClosure)):
        ok = all(closure.gamma(n).is_zero for n in range(1, 5))
        rep.add(f"{name}: homogeneous (gamma_n = 0)", ok)


def cmd_verify(args) -> int:
    rep = Report("verify")
    try:
        if args.family == "burby" and args.levels:
            lo, hi = (int(v) for v in args.levels.split(".."))
            for m in range(lo, hi + 1):
                _verify_one(BurbyClosure(m, branch=args.branch), rep)
        else:
            _verify_one(_closure_from_args(args), rep)
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return rep.emit(args.json, Path(args.out) if args.out else None)


# ---------------------------------------------------------------------------
# closure show / casimir / eos
# ---------------------------------------------------------------------------


def cmd_closure(args) -> int:
    try:
        closure = _closure_from_args(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    names = closure.nu_names
    if args.action == "show":
        nmax = args.nmax or max(2 * closure.nu_count + 1, 2)
        for n in range(1, nmax + 1):
            print(f"mu_{n} = {closure.mu(n).to_text(names)}")
        return 0
    if args.action == "casimir":
        cas = bracket.casimirs(closure)
        print("Casimir densities:")
        for d in cas.densities:
            print(f"  {d.kind}: {d.description}")
        if isinstance(closure, BurbyClosure):
            nu = [Fraction(1, 2)] * closure.m
            nu[-1] = Fraction(2)
            mus = [float(closure.mu(n).eval(nu)) for n in range(1, closure.m + 1)]
            back = closure.invert(mus)
            print(f"sample point: mu = {mus}")
            print(f"recovered nu = {[round(v, 12) for v in back]}")
        return 0
    if args.action == "eos":
        mu_obs = [float(v) for v in args.mu.split(",")]
        closed = equation_of_state(closure, mu_obs)
        if isinstance(closure, BurbyClosure):
            nu = closure.invert(mu_obs)
            print(f"nu = {[round(float(v), 12) for v in nu]}")
        print("closed moments:",
              [round(float(v), 12) for v in closed])
        return 0
    print(f"error: unknown closure action {args.action!r}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_GRID_KEYS = ("L", "nx", "method")
_INTEGRATOR_KEYS = ("scheme", "dt", "t_end")
_INITIAL_KEYS = ("type", "n0", "eps", "u0", "nu_base", "nu_eps")
_OUTPUT_KEYS = ("stride", "snapshots")


def load_config(path) -> dict:
    cfg = json.loads(Path(path).read_text())
    _reject_unknown(cfg, ("grid", "closure", "initial", "integrator",
                          "output", "streams", "tolerance"), "config")
    return cfg


def _build_grid(spec: dict) -> sim.Grid:
    _reject_unknown(spec, _GRID_KEYS, "grid")
    return sim.Grid(L=float(spec["L"]), nx=int(spec["nx"]),
                    method=spec.get("method", "spectral"))


def _build_initial(spec: dict, grid: sim.Grid, closure: ClosureFamily) -> sim.FieldState:
    _reject_unknown(spec, _INITIAL_KEYS, "initial")
    if spec.get("type", "single_mode") != "single_mode":
        raise ValueError(f"unknown initial condition {spec.get('type')!r}")
    return sim.single_mode_state(
        grid, closure,
        n0=float(spec.get("n0", 1.0)), eps=float(spec.get("eps", 1e-3)),
        u0=float(spec.get("u0", 0.0)),
        nu_base=[float(v) for v in spec.get("nu_base", [])],
        nu_eps=[float(v) for v in spec.get("nu_eps", [])])


def cmd_simulate(args) -> int:
    rep = Report("simulate")
    outdir = Path(args.out)
    try:
        cfg = load_config(args.config)
        grid = _build_grid(cfg["grid"])
        closure = closure_from_spec(cfg["closure"])
        state = _build_initial(cfg.get("initial", {}), grid, closure)
        integ = dict(cfg["integrator"])
        _reject_unknown(integ, _INTEGRATOR_KEYS, "integrator")
        output = dict(cfg.get("output", {}))
        _reject_unknown(output, _OUTPUT_KEYS, "output")
    except (KeyError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    outdir.mkdir(parents=True, exist_ok=True)
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    snap_every = int(output.get("snapshots", 0))
    count = [0]

    def on_record(s, rec):
        count[0] += 1
        if snap_every and count[0] % snap_every == 0:
            sim.write_snapshot(snapdir / f"snap_{count[0]:06d}.npz",
                               s, grid.nx, closure.N)

    try:
        result = sim.run_fluid(state, closure, grid,
                               dt=float(integ["dt"]), t_end=float(integ["t_end"]),
                               scheme=integ.get("scheme", "rk4"),
                               stride=int(output.get("stride", 1)),
                               on_record=on_record)
    except sim.SimulationError as e:
        rep.add("run completed", False, str(e))
        return rep.emit(args.json, outdir)
    sim.write_diagnostics_csv(outdir / "diagnostics.csv", result.records,
                              closure.nu_count)
    sim.write_snapshot(snapdir / "final.npz", result.final, grid.nx, closure.N)
    rep.add("run completed", True, f"{len(result.records)} records")
    r0 = result.records[0]

    def drift(get, scale):
        return max(abs(get(r) - get(r0)) for r in result.records) / max(abs(scale), 1e-30)

    rep.add("H drift < 1e-6", drift(lambda r: r.H, r0.H) < 1e-6,
            f"{drift(lambda r: r.H, r0.H):.2e}")
    rep.add("mass drift < 1e-6", drift(lambda r: r.C_mass, r0.C_mass) < 1e-6,
            f"{drift(lambda r: r.C_mass, r0.C_mass):.2e}")
    for k in range(closure.nu_count):
        d = drift(lambda r, k=k: r.C_nu[k], r0.C_nu[k] or r0.C_mass)
        rep.add(f"C_{k + 1} drift < 1e-6", d < 1e-6, f"{d:.2e}")
    return rep.emit(args.json, outdir)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def cmd_compare(args) -> int:
    from .closures import multidelta_normal_map
    from .moments import p_from_mu

    rep = Report("compare")
    outdir = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config)
        grid = _build_grid(cfg["grid"])
        streams = dict(cfg.get("streams", {}))
        _reject_unknown(streams, ("n0", "v0", "eps"), "streams")
        integ = dict(cfg["integrator"])
        _reject_unknown(integ, _INTEGRATOR_KEYS, "integrator")
        tol = float(cfg.get("tolerance", 1e-6))
    except (KeyError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    sst = sim.two_stream_state(grid, n0=float(streams.get("n0", 1.0)),
                               v0=float(streams.get("v0", 0.2)),
                               eps=float(streams.get("eps", 1e-3)))
    md = MultiDeltaClosure(2)
    rho, u, xi, eta = multidelta_normal_map(list(sst.a), list(sst.v))
    fst = sim.FieldState(rho, u, np.array([xi[0], eta[0]]), sst.n0)
    dt, t_end = float(integ["dt"]), float(integ["t_end"])
    nsteps = int(round(t_end / dt))
    s_f, s_s = fst, sst
    broke = None
    for i in range(nsteps):
        s_f = sim.step(s_f, md, grid, dt)
        s_s = sim.step_streams(s_s, grid, dt)
        try:
            sim.check_wave_breaking(s_s, grid)
        except sim.WaveBreakError as e:
            broke = str(e)
            break
    tab = [md.mu(k).compile_float() for k in range(1, 4)]
    nuv = list(s_f.nu)
    mu_vals = [f(nuv) for f in tab]
    psi = s_f.u - s_f.rho * mu_vals[0]
    P_fluid = p_from_mu(s_f.rho, psi, mu_vals)
    P_stream = [np.sum(s_s.a * s_s.v ** k, axis=0) for k in range(4)]
    for k, (Pf, Ps) in enumerate(zip(P_fluid, P_stream)):
        dev = float(np.max(np.abs(Pf - Ps)) / np.max(np.abs(Ps)))
        rep.add(f"P_{k} max relative deviation < {tol}", dev < tol, f"{dev:.2e}")
    rep.add("no wave breaking in window", broke is None, broke or "")
    return rep.emit(args.json, outdir)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_family_flags(p):
    p.add_argument("--family", required=True,
                   choices=["multidelta", "waterbag", "burby", "fourfield",
                            "generic", "cold"])
    p.add_argument("--level", type=int, help="level m (burby) / stream count")
    p.add_argument("--levels", help="level range lo..hi (burby)")
    p.add_argument("--M", type=int, help="stream count (multidelta)")
    p.add_argument("--heights", help="comma-separated waterbag heights")
    p.add_argument("--kappa", help="four-field parameter")
    p.add_argument("--mu2", help="generating cubic, e.g. 'nu1^2*nu2'")
    p.add_argument("--metric", help="metric rows, e.g. '0,1;1,0'")
    p.add_argument("--branch", choices=["plus", "minus"], default="plus")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hydroclosures")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("verify", help="run the exact-identity suite")
    _add_family_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("closure", help="inspect closure polynomials")
    p.add_argument("action", choices=["show", "casimir", "eos"])
    _add_family_flags(p)
    p.add_argument("--nmax", type=int)
    p.add_argument("--mu", help="observed moments mu_1..mu_(N-2), comma-separated")
    p.set_defaults(fn=cmd_closure)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="fluid vs multi-stream oracle comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_compare)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
