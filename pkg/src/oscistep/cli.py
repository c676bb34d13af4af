"""Command-line front end.

Subcommands: step, solve, converge, termcount, bounds, stochastic-check.
Configuration comes from an optional JSON file (flat keys named like the
flags) with every key overridable on the command line.  Output is CSV on
stdout, or to a file with --out; complex values are serialized as
"re+imj" with 17 significant digits so runs are byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .errors import ConfigError, NumericStepError, OscistepError
from .jets import CoefficientField, builtin_field, make_field
from .oscillator import OscillatorSpec, absorb_mean, make_oscillator, v_norm
from .oracles import (adaptive_quadrature, exact_exp_macro,
                      exact_pure_oscillatory, fit_slope, rk4_micro_solve)
from .stepping import (BoundInputs, bound_R11, bound_R22, build_scheme,
                       estimate_coefficient_bound, solve, step,
                       step_phase_averaged)
from .terms import (TruncationPolicy, enumerate_words, policy_matches_scheme,
                    stochastic_scheme_words, term_count)

__all__ = ["RunConfig", "main"]

PROBLEMS = ("linear", "nonlinear", "power", "freqdep", "custom-fourier")


@dataclass
class RunConfig:
    problem: str = "linear"
    omega: float = 100.0
    phi: float = 0.0
    nu: float = 0.0
    mu: complex = 10.0 + 0j
    alpha: complex = 1.0 + 0j
    gamma: int = 1
    u0: complex = 1.0 + 0j
    t0: float = 0.0
    tend: float = 1.0
    h: float = 0.1
    kappa: float | None = None
    rho: float | None = None
    kappa0: float | None = None
    kappa1: float | None = None
    phase_averaged: bool = False
    emit_contributions: bool = False
    oracle: str = "none"
    fourier: dict | None = None
    out: str | None = None

    def policy(self) -> TruncationPolicy:
        if self.kappa0 is not None and self.kappa1 is not None:
            return TruncationPolicy(self.kappa0, self.kappa1)
        if self.kappa is not None and self.rho is not None:
            return TruncationPolicy.from_order(self.kappa, self.rho, self.nu)
        raise ConfigError("supply either (kappa0, kappa1) or (kappa, rho)")


def parse_complex(text) -> complex:
    """Parse 're', 're,im' or a [re, im] pair."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    parts = str(text).split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse complex value {text!r}; use 're' or 're,im'")


def fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def fmt_float(x: float) -> str:
    return f"{float(x):.17g}"


class Problem:
    """A named ODE setup: coefficient field, oscillator, exact oracle."""

    def __init__(self, field: CoefficientField, osc: OscillatorSpec, exact=None):
        self.field = field
        self.osc = osc
        self.exact = exact  # callable t -> complex, or None


def build_problem(cfg: RunConfig) -> Problem:
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {cfg.problem!r}; choices: {PROBLEMS}")
    om, phi = cfg.omega, cfg.phi
    if cfg.problem == "linear":
        field = builtin_field("linear", mu=cfg.mu)
        osc = make_oscillator("cos", om, phi, cfg.nu)
        exact = lambda t: exact_exp_macro(lambda s: s, 1, cfg.mu, osc, t, cfg.u0,
                                          alpha_antideriv=lambda s: s * s / 2.0)
    elif cfg.problem == "nonlinear":
        field = builtin_field("nonlinear", alpha=cfg.alpha, mu=cfg.mu)
        osc = make_oscillator("exp", om, phi, cfg.nu)
        exact = lambda t: exact_exp_macro(cfg.alpha, -1, cfg.mu, osc, t, cfg.u0)
    elif cfg.problem == "power":
        field = builtin_field("power", gamma=cfg.gamma)
        osc = make_oscillator("cos", om, phi, cfg.nu)

        def exact(t):
            dv = adaptive_quadrature(osc.value, 0.0, t, 1e-12,
                                     half_period=math.pi / om).value
            return exact_pure_oscillatory(cfg.gamma, cfg.u0, dv)
    elif cfg.problem == "freqdep":
        field = builtin_field("freqdep", alpha=cfg.alpha, mu=cfg.mu)
        osc = make_oscillator("exp", om, phi, cfg.nu)
        exact = lambda t: exact_exp_macro(cfg.alpha, -1, cfg.mu, osc, t, cfg.u0)
    else:  # custom-fourier
        if not cfg.fourier:
            raise ConfigError("problem 'custom-fourier' requires a 'fourier' "
                              "coefficient table in the config file")
        coeffs = {int(k): parse_complex(v) for k, v in cfg.fourier.items()}
        osc = make_oscillator("fourier", om, phi, cfg.nu, coeffs)
        alpha, mu, gamma = cfg.alpha, cfg.mu, cfg.gamma
        expo = 1 - gamma
        base = make_field(1, lambda t, u: [alpha * u[0]],
                          lambda t, u: [mu * u[0] ** expo], name="custom-fourier")
        field = absorb_mean(base, osc.removed_mean)
        exact = lambda t: exact_exp_macro(alpha, gamma, mu, osc, t, cfg.u0,
                                          v_offset=osc.removed_mean)
    return Problem(field, osc, exact)


def oracle_value(cfg: RunConfig, prob: Problem, t: float):
    if cfg.oracle == "none":
        return None
    if cfg.oracle == "exact":
        if prob.exact is None:
            raise ConfigError(f"no exact oracle for problem {cfg.problem!r}")
        if cfg.t0 != 0.0:
            raise ConfigError("the exact oracle's closed forms anchor at t0 = 0")
        return prob.exact(t)
    if cfg.oracle == "rk4":
        dt = prob.osc.period / 200.0
        traj = rk4_micro_solve(prob.field, prob.osc, cfg.t0,
                               np.array([cfg.u0]), t, dt)
        return traj[-1][1][0]
    raise ConfigError(f"unknown oracle {cfg.oracle!r}; choices: exact, rk4, none")


# -- commands -----------------------------------------------------------------

def cmd_step(cfg: RunConfig) -> tuple[int, list[str]]:
    prob = build_problem(cfg)
    scheme = build_scheme(prob.osc, cfg.policy())
    stepper = step_phase_averaged if cfg.phase_averaged else step
    res = stepper(scheme, prob.field, cfg.t0, np.array([cfg.u0]), cfg.h)
    header = ["t_next", "u_next"]
    row = [fmt_float(res.t_next), fmt_complex(res.u_next[0])]
    if cfg.emit_contributions:
        for entry, contrib in zip(scheme.entries, res.contributions):
            header.append(f"term_{entry.word}")
            row.append(fmt_complex(contrib[0]))
    ref = oracle_value(cfg, prob, cfg.t0 + cfg.h)
    if ref is not None:
        header += ["oracle", "abs_error"]
        row += [fmt_complex(ref), fmt_float(abs(res.u_next[0] - ref))]
    return 0, [",".join(header), ",".join(row)]


def cmd_solve(cfg: RunConfig) -> tuple[int, list[str]]:
    prob = build_problem(cfg)
    scheme = build_scheme(prob.osc, cfg.policy())
    traj = solve(scheme, prob.field, cfg.t0, np.array([cfg.u0]), cfg.tend, cfg.h)
    with_oracle = cfg.oracle != "none"
    header = "t,u" + (",oracle,abs_error" if with_oracle else "")
    lines = [header]
    for t, u in traj:
        row = [fmt_float(t), fmt_complex(u[0])]
        if with_oracle:
            ref = oracle_value(cfg, prob, t) if t > cfg.t0 else complex(cfg.u0)
            row += [fmt_complex(ref), fmt_float(abs(u[0] - ref))]
        lines.append(",".join(row))
    return 0, lines


def cmd_converge(cfg: RunConfig, h_list: list[float],
                 couple_c: float | None) -> tuple[int, list[str]]:
    if len(h_list) < 3:
        raise ConfigError("converge needs at least three step sizes")
    lines = ["h,omega,abs_error"]
    pts = []
    for h in h_list:
        sub = _replace(cfg, h=h)
        if couple_c is not None:
            rho = cfg.rho if cfg.rho is not None else 2.0
            sub.omega = 1.0 / (couple_c * h ** rho)
        prob = build_problem(sub)
        scheme = build_scheme(prob.osc, sub.policy())
        res = step(scheme, prob.field, sub.t0, np.array([sub.u0]), h)
        ref = oracle_value(_replace(sub, oracle="exact" if cfg.oracle == "none" else cfg.oracle),
                           prob, sub.t0 + h)
        err = abs(res.u_next[0] - ref)
        pts.append((h, err))
        lines.append(",".join([fmt_float(h), fmt_float(sub.omega), fmt_float(err)]))
    lines.append("slope,%s," % fmt_float(fit_slope(pts)))
    return 0, lines


def cmd_termcount(kappa: int, rho: int) -> tuple[int, list[str]]:
    n = term_count(kappa, rho)
    return 0, ["kappa,rho,terms", f"{kappa},{rho},{n}"]


def cmd_bounds(cfg: RunConfig, h_list: list[float], omega_list: list[float],
               K: float | None, box_t: float | None,
               box_radius: float) -> tuple[int, list[str]]:
    lines = ["h,omega,error_first,bound_first,error_second,bound_second,satisfied"]
    all_ok = True
    for h in h_list:
        for om in omega_list:
            sub = _replace(cfg, h=h, omega=om)
            prob = build_problem(sub)
            if K is None:
                t_hi = box_t if box_t is not None else sub.t0 + max(h_list)
                K1 = estimate_coefficient_bound(prob.field, (sub.t0, t_hi),
                                                np.array([sub.u0]), box_radius, 1)
                K2 = estimate_coefficient_bound(prob.field, (sub.t0, t_hi),
                                                np.array([sub.u0]), box_radius, 2)
            else:
                K1 = K2 = K
            vn = v_norm(prob.osc)
            ref = prob.exact(sub.t0 + h)
            s1 = step(build_scheme(prob.osc, TruncationPolicy(1, 1)), prob.field,
                      sub.t0, np.array([sub.u0]), h)
            s2 = step(build_scheme(prob.osc, TruncationPolicy(2, 2)), prob.field,
                      sub.t0, np.array([sub.u0]), h)
            e1 = abs(s1.u_next[0] - ref)
            e2 = abs(s2.u_next[0] - ref)
            b1 = bound_R11(BoundInputs(K1, vn, h, om))
            b2 = bound_R22(BoundInputs(K2, vn, h, om))
            ok = e1 <= b1 and e2 <= b2
            all_ok = all_ok and ok
            lines.append(",".join([fmt_float(h), fmt_float(om), fmt_float(e1),
                                   fmt_float(b1), fmt_float(e2), fmt_float(b2),
                                   "true" if ok else "false"]))
    return (0 if all_ok else 1), lines


def cmd_stochastic_check(kappa: float, rho_prime: float,
                         scheme: str) -> tuple[int, list[str]]:
    policy = TruncationPolicy(kappa, kappa / rho_prime)
    retained = enumerate_words(policy)
    match = policy_matches_scheme(kappa, rho_prime, scheme)
    want = ";".join(sorted(str(w) for w in stochastic_scheme_words(scheme)))
    got = ";".join(str(w) for w in retained)
    return 0, ["kappa,rho_prime,scheme,scheme_words,retained_words,match",
               f"{fmt_float(kappa)},{fmt_float(rho_prime)},{scheme},{want},{got},"
               + ("true" if match else "false")]


# -- argument plumbing --------------------------------------------------------

def _replace(cfg: RunConfig, **kw) -> RunConfig:
    d = {f.name: getattr(cfg, f.name) for f in dc_fields(RunConfig)}
    d.update(kw)
    return RunConfig(**d)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with flat RunConfig keys")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--omega", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--mu")
    p.add_argument("--alpha")
    p.add_argument("--gamma", type=int)
    p.add_argument("--u0", help="complex as 're,im'")
    p.add_argument("--t0", type=float)
    p.add_argument("--tend", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--kappa0", type=float)
    p.add_argument("--kappa1", type=float)
    p.add_argument("--phase-averaged", action="store_true", default=None)
    p.add_argument("--emit-contributions", action="store_true", default=None)
    p.add_argument("--oracle", choices=("exact", "rk4", "none"))
    p.add_argument("--out", help="write CSV here instead of stdout")


def _load_config(ns: argparse.Namespace) -> RunConfig:
    data = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config!r}: {exc}") from exc
        unknown = set(data) - {f.name for f in dc_fields(RunConfig)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for f in dc_fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None:
            data[f.name] = v
    for key in ("mu", "alpha", "u0"):
        if key in data:
            data[key] = parse_complex(data[key])
    for key in ("omega", "phi", "nu", "t0", "tend", "h"):
        if key in data:
            data[key] = float(data[key])
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _validate(cfg: RunConfig):
    # the frequency-dependent problem defaults to amplitude exponent -1/2,
    # applied here so the truncation policy sees the same nu
    if cfg.problem == "freqdep" and cfg.nu == 0.0:
        cfg.nu = -0.5
    if cfg.tend <= cfg.t0:
        raise ConfigError("tend must exceed t0")
    if cfg.h <= 0:
        raise ConfigError("h must be positive")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse float list {text!r}") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscistep",
        description="Macro-step integration of du/dt = a(t,u) + b(t,u) v(t) "
                    "with a rapidly oscillating factor v")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("step", "solve"):
        _add_common(sub.add_parser(name))
    pc = sub.add_parser("converge")
    _add_common(pc)
    pc.add_argument("--h-list", required=True, help="comma-separated step sizes")
    pc.add_argument("--couple-c", type=float,
                    help="couple omega^-1 = c h^rho along the study")
    pt = sub.add_parser("termcount")
    pt.add_argument("--kappa", type=int, required=True)
    pt.add_argument("--rho", type=int, required=True)
    pt.add_argument("--out")
    pb = sub.add_parser("bounds")
    _add_common(pb)
    pb.add_argument("--h-list", default="0.2,0.1,0.05")
    pb.add_argument("--omega-list", default="50,100,200")
    pb.add_argument("--K", type=float, help="explicit coefficient bound")
    pb.add_argument("--box-t", type=float, help="upper end of the K-sampling box in t")
    pb.add_argument("--box-radius", type=float, default=0.5,
                    help="radius of the K-sampling box around u0")
    ps = sub.add_parser("stochastic-check")
    ps.add_argument("--kappa", type=float, required=True)
    ps.add_argument("--rho-prime", type=float, required=True)
    ps.add_argument("--scheme", choices=("euler", "milstein"), required=True)
    ps.add_argument("--out")

    try:
        ns = parser.parse_args(argv)
        if ns.command == "termcount":
            code, lines = cmd_termcount(ns.kappa, ns.rho)
        elif ns.command == "stochastic-check":
            code, lines = cmd_stochastic_check(ns.kappa, ns.rho_prime, ns.scheme)
        else:
            cfg = _load_config(ns)
            _validate(cfg)
            if ns.command == "step":
                code, lines = cmd_step(cfg)
            elif ns.command == "solve":
                code, lines = cmd_solve(cfg)
            elif ns.command == "converge":
                code, lines = cmd_converge(cfg, _float_list(ns.h_list), ns.couple_c)
            elif ns.command == "bounds":
                code, lines = cmd_bounds(cfg, _float_list(ns.h_list),
                                         _float_list(ns.omega_list), ns.K,
                                         ns.box_t, ns.box_radius)
            else:  # pragma: no cover
                raise ConfigError(f"unhandled command {ns.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericStepError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OscistepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    text = "\n".join(lines) + "\n"
    out_path = getattr(ns, "out", None)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
