"""Command-line front end: simulation runs, resumption, and the
verification suites.

Configuration is a flat ``key = value`` text file ('#' starts a comment);
every command-line flag mirrors a config key and wins over the file.  All
values are validated before any file output is created.  Exit codes:
0 success, 2 config error, 3 blow-up abort, 4 assertion failure inside a
verification suite.  The only environment variable honored is
``BQ2D_OUT_DIR``, which overrides the output directory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import kernels, solver
from .lp import BesovIndex, besov_norm, dyadic_blocks
from .spectral import FlowParams, GridSpec, PhysicalField, lp_norm, to_physical, to_spectral
from .monitors import (
    CONVEX_GAMMAS,
    check_besov_index,
    check_lq_index,
    cordoba_margin,
    cordoba_scale,
    csv_header,
    difference_lower_bound_margin,
    dissipation_rates,
    energy_margin,
    gradient_lower_bound_margin,
    index_window,
    max_principle_margins,
    snapshot_record,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_ASSERTION = 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 64
    side_length: float = 2.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0
    nu: float = 1.0
    kappa: float = 1.0
    alpha: float = 0.9
    beta: float = -1.0  # -1 means: derive from the critical relation
    critical: bool = True
    dt_init: float = 0.01
    cfl_number: float = 0.4
    t_end: float = 1.0
    n_steps: int | None = None
    init_kind: str = "random-band"
    seed: int = 0
    amplitude: float = 1.0
    diag_every: int = 10
    checkpoint_every: int = 0
    out_dir: str = "bq2d_out"
    monitor_q: float = -1.0  # -1 means: pick inside the admissible window
    monitor_s: float = -1.0
    oss_delta_c: float = 1.0
    oss_L: float = 0.2

    def _window(self):
        try:
            return index_window(self.alpha)
        except ValueError:
            return None  # monitors fall back to plain norms outside (4/5, 1)

    def resolve(self) -> "RunConfig":
        if self.critical and self.beta < 0:
            self.beta = 1.0 - self.alpha
        if self.beta < 0:
            raise ConfigError("beta must be given when critical = false")
        win = self._window()
        if self.monitor_q < 0:
            if win is None:
                self.monitor_q = 3.0
            else:
                # inside the Besov index window when it is nonempty, else the L^q one
                lo = win.q_low_sqdef if win.q_low_sqdef < win.q0 else 2.0
                self.monitor_q = 0.5 * (lo + win.q0)
        if self.monitor_s < 0:
            self.monitor_s = win.s_max if win is not None else 0.5
        return self

    def validate(self) -> None:
        try:
            self.grid()
            self.flow_params()
            self.stepper()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.init_kind not in ("taylor-green-like", "gaussian-bumps", "random-band"):
            raise ConfigError(f"unknown init_kind {self.init_kind!r}")
        if self.diag_every < 1:
            raise ConfigError("diag_every must be >= 1")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if self.oss_L > self.side_length / 2.0:
            raise ConfigError("oss_L must not exceed side_length / 2")
        win = self._window()
        if win is not None:
            try:
                # startup gate: the L^q window plus the smoothness cap; the
                # stricter Besov q-window applies only where it is nonempty
                check_lq_index(self.alpha, self.monitor_q)
                if not 0.0 < self.monitor_s <= win.s_max:
                    raise ValueError(
                        f"monitor_s={self.monitor_s} violates 0 < s <= 3*alpha - 2 = {win.s_max:.6f}"
                    )
                if win.q_low_sqdef < win.q0:
                    check_besov_index(self.alpha, self.monitor_s, self.monitor_q)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        elif self.monitor_q < 1.0 or not 0.0 < self.monitor_s:
            raise ConfigError("monitor indices must satisfy q >= 1 and s > 0")

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.side_length, self.dealias_fraction)

    def flow_params(self) -> FlowParams:
        return FlowParams(self.nu, self.kappa, self.alpha, self.beta, critical=self.critical)

    def stepper(self) -> solver.StepperConfig:
        return solver.StepperConfig(self.dt_init, self.cfl_number, self.t_end)


_BOOL_KEYS = {"critical"}
_INT_KEYS = {"n", "seed", "diag_every", "checkpoint_every", "n_steps"}
_STR_KEYS = {"init_kind", "out_dir"}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        if raw.lower() == "none":
            return None
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from exc
    if key in _STR_KEYS:
        return raw
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in known:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def build_config(config_path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    if config_path is not None:
        try:
            with open(config_path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for key, val in parse_config_text(text).items():
            setattr(cfg, key, val)
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    env_out = os.environ.get("BQ2D_OUT_DIR")
    if env_out:
        cfg.out_dir = env_out
    cfg.resolve()
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# run / resume


def _float_fmt(x: float) -> str:
    return repr(float(x))


def _run_loop(cfg: RunConfig, state: solver.SimState, params: FlowParams, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    stepper = cfg.stepper()
    theta0_l2 = lp_norm(state.theta, 2)
    theta0_linf = lp_norm(state.theta, math.inf)
    rec0 = snapshot_record(state, params, cfg.monitor_q, cfg.monitor_s, 0.0, 0.0)
    u0_l2 = rec0.u_l2
    diss_u = diss_G = 0.0
    rate_u, rate_G = dissipation_rates(state, params)

    delta_target = solver.delta_star(max(theta0_linf, 1e-300), params.beta, cfg.oss_delta_c)

    def fill_margins(rec):
        m2, minf = max_principle_margins(rec, theta0_l2, theta0_linf)
        lin, _ = energy_margin(rec, u0_l2, theta0_l2)
        gamma, gamma_p = CONVEX_GAMMAS["square"]
        rec.margins["maxprinciple_l2"] = m2
        rec.margins["maxprinciple_linf"] = minf
        rec.margins["energy_linear"] = lin
        rec.margins["cordoba_min"] = cordoba_margin(cur.theta, params.beta, gamma, gamma_p)
        rec.margins["oss_delta_measured"] = solver.oss_check(
            cur.theta, delta_target, cfg.oss_L
        ).delta_measured
        return rec

    csv_path = os.path.join(out_dir, "diagnostics.csv")
    worst = {"maxprinciple_l2": 0.0, "maxprinciple_linf": 0.0, "energy_linear": 0.0}
    step_count = 0
    cur = state
    try:
        with open(csv_path, "w") as csv:
            csv.write(csv_header() + "\n")
            rec = fill_margins(rec0)
            csv.write(rec.csv_row() + "\n")
            csv.flush()
            for cur in solver.run(state, params, stepper, n_steps=cfg.n_steps):
                step_count += 1
                new_u, new_G = dissipation_rates(cur, params)
                dt = cur.t - (state.t if step_count == 1 else prev_t)
                diss_u += 0.5 * dt * (rate_u + new_u)
                diss_G += 0.5 * dt * (rate_G + new_G)
                rate_u, rate_G = new_u, new_G
                prev_t = cur.t
                if cfg.checkpoint_every and step_count % cfg.checkpoint_every == 0:
                    solver.write_checkpoint(
                        os.path.join(out_dir, f"ckpt_{step_count:08d}.chk"), cur, params
                    )
                if step_count % cfg.diag_every == 0:
                    rec = fill_margins(
                        snapshot_record(cur, params, cfg.monitor_q, cfg.monitor_s, diss_u, diss_G)
                    )
                    for key in worst:
                        worst[key] = min(worst[key], rec.margins[key])
                    csv.write(rec.csv_row() + "\n")
                    csv.flush()
            if step_count % cfg.diag_every != 0:
                rec = fill_margins(
                    snapshot_record(cur, params, cfg.monitor_q, cfg.monitor_s, diss_u, diss_G)
                )
                for key in worst:
                    worst[key] = min(worst[key], rec.margins[key])
                csv.write(rec.csv_row() + "\n")
                csv.flush()
    except solver.BlowUpError as exc:
        post = os.path.join(out_dir, "post_mortem.csv")
        with open(post, "w") as fh:
            fh.write(f"# blow-up at t={exc.t!r} max_omega={exc.omega_max!r}\n")
            fh.write(csv_header() + "\n")
            # last finite state, for the post-mortem
            rec = fill_margins(
                snapshot_record(cur, params, cfg.monitor_q, cfg.monitor_s, diss_u, diss_G)
            )
            fh.write(rec.csv_row() + "\n")
        print(f"blow-up abort: {exc} (post-mortem: {post})", file=sys.stderr)
        return EXIT_BLOWUP
    solver.write_checkpoint(os.path.join(out_dir, "final.chk"), cur, params)
    print(f"steps={step_count} t_final={_float_fmt(cur.t)}")
    print(
        "final: theta_l2={} theta_linf={} omega_linf={}".format(
            _float_fmt(rec.theta_l2), _float_fmt(rec.theta_linf), _float_fmt(rec.omega_linf)
        )
    )
    print(
        "worst margins: maxprinciple_l2={} maxprinciple_linf={} energy_linear={}".format(
            *(_float_fmt(worst[k]) for k in ("maxprinciple_l2", "maxprinciple_linf", "energy_linear"))
        )
    )
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = build_config(args.config, _collect_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = cfg.grid()
    params = cfg.flow_params()
    state = solver.initial_data(cfg.init_kind, cfg.seed, grid, cfg.amplitude)
    report = solver.initial_report(state)
    print(
        "initial: theta_l2={theta_l2!r} theta_linf={theta_linf!r} "
        "grad_theta_linf={grad_theta_linf!r} u_l2={u_l2!r}".format(**report)
    )
    return _run_loop(cfg, state, params, cfg.out_dir)


def cmd_resume(args) -> int:
    try:
        state, params = solver.read_checkpoint(args.checkpoint)
    except (OSError, ValueError) as exc:
        print(f"config error: cannot resume: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = _collect_overrides(args)
    try:
        cfg = RunConfig()
        file_vals = {}
        if args.config is not None:
            with open(args.config) as fh:
                file_vals = parse_config_text(fh.read())
            for key, val in file_vals.items():
                setattr(cfg, key, val)
        header_vals = {
            "n": state.grid.n,
            "side_length": state.grid.side_length,
            "nu": params.nu,
            "kappa": params.kappa,
            "alpha": params.alpha,
            "beta": params.beta,
        }
        for key, ckpt_val in header_vals.items():
            if key in overrides:
                continue  # explicit flag overrides the header
            if key in file_vals and file_vals[key] != ckpt_val:
                raise ConfigError(
                    f"header mismatch on {key!r}: checkpoint has {ckpt_val!r}, "
                    f"config has {file_vals[key]!r} (pass --{key.replace('_', '-')} to override)"
                )
            setattr(cfg, key, ckpt_val)
        for key, val in overrides.items():
            setattr(cfg, key, val)
        env_out = os.environ.get("BQ2D_OUT_DIR")
        if env_out:
            cfg.out_dir = env_out
        cfg.critical = cfg.alpha + cfg.beta == 1.0
        cfg.resolve()
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = cfg.grid()
    state = solver.SimState(
        PhysicalField(grid, state.theta.values), PhysicalField(grid, state.omega.values), state.t
    )
    return _run_loop(cfg, state, cfg.flow_params(), cfg.out_dir)


# ---------------------------------------------------------------------------
# verification subcommands


def _emit(rows, out_path: str | None):
    text = "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_kernel_verify(args) -> int:
    beta, n = args.beta, args.n
    rows = [["check", "value", "threshold", "pass"]]
    ok = True

    def add(name, value, threshold, passed):
        nonlocal ok
        ok = ok and passed
        rows.append([name, repr(float(value)), repr(float(threshold)), passed])

    cm = np.abs(kernels.circle_mean_sigma(1.0, 64)).max()
    add("sigma_circle_mean", cm, 1e-12, cm <= 1e-12)
    try:
        res = kernels.quadrature_errors(beta, n)
        res2 = kernels.quadrature_errors(beta, 2 * n)
    except kernels.CalibrationError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    add("v_residual_n", res["v_residual"], 1e-3, res["v_residual"] <= 1e-3)
    add("symgrad_error_n", res["symgrad_error"], 1e-2, res["symgrad_error"] <= 1e-2)
    add("v_residual_2n", res2["v_residual"], 1e-3, res2["v_residual"] <= 1e-3)
    ratio = res["v_residual"] / max(res2["v_residual"], 1e-300)
    add("v_refinement_ratio", ratio, 2.0, ratio >= 2.0)
    c_drift = abs(res2["C_star"] / res["C_star"] - 1.0)
    add("C_star_drift", c_drift, 0.01, c_drift <= 0.01)

    grid = GridSpec(n=n)
    theta = kernels.gaussian_bump(grid)
    full = kernels.symgrad_v_quadrature(theta, kernels.KernelConfig(beta=beta), 1.0)
    near, mid, far = kernels.split_symgrad_bound(theta, rho=0.05, L_split=1.0, beta=beta)
    scale = max(np.abs(f.values).max() for f in full) + 1e-300
    worst = max(
        np.abs(near[i].values + mid[i].values + far[i].values - full[i].values).max()
        for i in range(3)
    )
    add("split_partition_identity", worst / scale, 1e-12, worst / scale <= 1e-12)
    rows.append(["C_star", repr(float(res["C_star"])), "", ""])
    _emit(rows, args.out)
    return EXIT_OK if ok else EXIT_ASSERTION


def cmd_inequality_suite(args) -> int:
    try:
        cfg = build_config(args.config, _collect_overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = cfg.grid()
    params = cfg.flow_params()
    state = solver.initial_data(cfg.init_kind, cfg.seed, grid, cfg.amplitude)
    theta0_l2 = lp_norm(state.theta, 2)
    theta0_linf = lp_norm(state.theta, math.inf)
    rec0 = snapshot_record(state, params, cfg.monitor_q, cfg.monitor_s, 0.0, 0.0)
    u0_l2 = rec0.u_l2

    snapshots = [state]
    try:
        for st in solver.run(state, params, cfg.stepper(), n_steps=cfg.n_steps):
            snapshots.append(st)
    except solver.BlowUpError as exc:
        print(f"blow-up abort: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    picks = snapshots[:: max(1, len(snapshots) // 4)][:5]

    rows = [["check", "value", "threshold", "pass"]]
    ok = True

    def add(name, value, threshold, passed):
        nonlocal ok
        ok = ok and bool(passed)
        rows.append([name, repr(float(value)), repr(float(threshold)), bool(passed)])

    for st in (snapshots[-1],):
        rec = snapshot_record(st, params, cfg.monitor_q, cfg.monitor_s, 0.0, 0.0)
        m2, minf = max_principle_margins(rec, theta0_l2, theta0_linf)
        band = 1e-6 * (1.0 + st.t)
        add("maxprinciple_l2", m2, -band * theta0_l2, m2 >= -band * theta0_l2)
        add("maxprinciple_linf", minf, -band * theta0_linf, minf >= -band * theta0_linf)
        lin, _ = energy_margin(rec, u0_l2, theta0_l2)
        add("energy_linear", lin, -band * max(u0_l2, 1.0), lin >= -band * max(u0_l2, 1.0))

    for name, (gam, gam_p) in CONVEX_GAMMAS.items():
        worst = math.inf
        for st in picks:
            margin = cordoba_margin(st.theta, params.beta, gam, gam_p)
            scale = cordoba_scale(st.theta, params.beta, gam, gam_p)
            worst = min(worst, margin / scale)
        add(f"cordoba_{name}", worst, -1e-8, worst >= -1e-8)

    for st in picks[-1:]:
        exact, _ = gradient_lower_bound_margin(st.theta, params.beta, 4.0)
        scale = max(np.abs(st.theta.values).max() ** 2, 1e-300)
        add("gradlower_exact_part", exact / scale, -1e-8, exact / scale >= -1e-8)
        exact_h, _ = difference_lower_bound_margin(st.theta, (grid.n // 4, 0), params.beta)
        add("difflower_exact_part", exact_h / scale, -1e-8, exact_h / scale >= -1e-8)

    m0 = rec0.grad_theta_linf
    if m0 > 0:
        delta = solver.delta_star(theta0_linf, params.beta, cfg.oss_delta_c)
        L = min(delta / (4.0 * m0), grid.side_length / 2.0)
        report = solver.oss_check(snapshots[-1].theta, delta, L)
        add("oss_lipschitz_choice", report.delta_measured, delta, report.holds)

    try:
        check_lq_index(params.alpha, index_window(params.alpha).q0 + 0.1)
        add("window_rejection", 0.0, 1.0, False)
    except ValueError:
        add("window_rejection", 1.0, 1.0, True)

    _emit(rows, args.out)
    return EXIT_OK if ok else EXIT_ASSERTION


def cmd_besov(args) -> int:
    try:
        state, params = solver.read_checkpoint(args.checkpoint)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.field == "theta":
        fh = state.theta_hat
    elif args.field == "omega":
        fh = state.omega_hat
    elif args.field == "G":
        fh = to_spectral(solver.compute_G(state, params.alpha))
    else:
        print(f"config error: unknown field {args.field!r}", file=sys.stderr)
        return EXIT_CONFIG
    rows = [["j", "weighted_block_norm"]]
    for band in dyadic_blocks(fh):
        norm = 2.0 ** (band.j * args.s) * lp_norm(to_physical(band.band), args.p)
        rows.append([band.j, repr(float(norm))])
    total = besov_norm(fh, BesovIndex(args.s, args.p, args.r))
    rows.append(["total", repr(float(total))])
    _emit(rows, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


_FLAG_KEYS = [f.name for f in fields(RunConfig)]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="flat key = value config file")
    for key in _FLAG_KEYS:
        flag = "--" + key.replace("_", "-")
        if key in _BOOL_KEYS:
            p.add_argument(flag, default=None, type=str, metavar="BOOL")
        elif key in _INT_KEYS:
            p.add_argument(flag, default=None, type=int)
        elif key in _STR_KEYS:
            p.add_argument(flag, default=None, type=str)
        else:
            p.add_argument(flag, default=None, type=float)


def _collect_overrides(args) -> dict:
    out = {}
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key in _BOOL_KEYS and isinstance(val, str):
            val = _coerce(key, val)
        out[key] = val
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bq2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config")
    _add_config_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_res = sub.add_parser("resume", help="resume from a checkpoint")
    p_res.add_argument("checkpoint")
    _add_config_flags(p_res)
    p_res.set_defaults(fn=cmd_resume)

    p_kv = sub.add_parser("kernel-verify", help="kernel-quadrature oracle suite")
    p_kv.add_argument("--beta", type=float, required=True)
    p_kv.add_argument("--n", type=int, default=256)
    p_kv.add_argument("--out", default=None)
    p_kv.set_defaults(fn=cmd_kernel_verify)

    p_iq = sub.add_parser("inequality-suite", help="a-priori-bound battery on a short run")
    _add_config_flags(p_iq)
    p_iq.add_argument("--out", default=None)
    p_iq.set_defaults(fn=cmd_inequality_suite)

    p_bs = sub.add_parser("besov", help="per-band Besov table for a checkpoint field")
    p_bs.add_argument("checkpoint")
    p_bs.add_argument("--s", type=float, required=True)
    p_bs.add_argument("--p", type=float, default=2.0)
    p_bs.add_argument("--r", type=float, default=math.inf)
    p_bs.add_argument("--field", default="theta", choices=["theta", "omega", "G"])
    p_bs.add_argument("--out", default=None)
    p_bs.set_defaults(fn=cmd_besov)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
