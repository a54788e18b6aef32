"""
Command-line front end.

    mcvd train  [--config FILE] [--out DIR] [--KEY VALUE ...]
    mcvd sweep  [--config FILE] --axis KEY --values V1,V2,... [--seeds S1,S2] [--out DIR] [--jobs N]
    mcvd bounds [--payoff TEXT | --delta D --r-max R --n-actions A --n-agents N] [--gamma G]
    mcvd gridnav-oracle
    mcvd gradcheck [--seeds N]
"""

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds
from .config import parse_config, parse_overrides, parse_payoff, parse_text
from .envs import DEFAULT_GRID_LAYOUT, OMG_PAYOFF, gridnav_transition, parse_grid_layout
from .errors import ConfigError, TrainingAborted, UndefinedGapError
from .training import train_run

log = logging.getLogger(__name__)

CURVE_HEADER = ("step", "mean_return", "std_return", "loss_td", "loss_jt", "epsilon")
SUMMARY_HEADER = ("value", "seed", "final_mean_return", "greedy_correct", "status")


def _num(x):
    return "nan" if x is None or not np.isfinite(x) else f"{x:.6f}"


def curve_csv(curve):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for r in curve:
        writer.writerow([r.step, _num(r.mean_return), _num(r.std_return), _num(r.loss_td), _num(r.loss_jt), _num(r.epsilon)])
    return buf.getvalue()


def _table(title, row_heads, col_heads, cells):
    width = 9
    lines = [title]
    lines.append(" " * width + " |" + "|".join(f"{h:>{width}.3f}" for h in col_heads))
    lines.append("-" * len(lines[-1]))
    for head, row in zip(row_heads, cells):
        lines.append(f"{head:>{width}.3f} |" + "|".join(f"{v:>{width}.3f}" for v in row))
    return "\n".join(lines)


def format_tables(report, labels=None):
    """
    Render a matrix-game evaluation the way payoff tables are usually shown:
    agent A's Q values head the rows, agent B's the columns, joint values fill
    the cells.
    """
    q = report.q_vectors
    n_agents, n_actions = q.shape
    labels = labels or [chr(ord("A") + i) for i in range(n_actions)]
    greedy = "(" + ",".join(labels[a] for a in report.greedy_action) + ")"
    out = [f"step {report.step}", f"greedy joint action {greedy}", ""]
    for i in range(n_agents):
        out.append(f"Q_{i}: " + "  ".join(f"{labels[a]}={q[i, a]:.3f}" for a in range(n_actions)))
    out.append("")
    tables = [("Q_jt (mixed)", report.q_jt), ("Q_hat (joint approximation)", report.q_hat)]
    for title, values in tables:
        if values is None:
            out.append(f"{title}: not available")
        elif n_agents == 2:
            out.append(_table(title, q[0], q[1], values))
        else:
            out.append(title)
            for idx in np.ndindex(values.shape):
                out.append("  " + ",".join(labels[a] for a in idx) + f" {values[idx]:.3f}")
        out.append("")
    return "\n".join(out)


def greedy_correct(config, report):
    if config.env != "matrix_game":
        return None
    best = np.unravel_index(int(np.argmax(config.payoff_table())), config.payoff_table().shape)
    return tuple(int(b) for b in best) == tuple(report.greedy_action)


def train_and_write(config, out_dir):
    """Run one training job and fill its result directory; returns ``(status, result)``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(config.to_text())
    try:
        result = train_run(config)
    except TrainingAborted as exc:
        (out / "ABORTED").write_text(f"{exc}\n")
        print(f"training aborted: {exc}", file=sys.stderr)
        return 2, None
    (out / "curve.csv").write_text(curve_csv(result.curve))
    if result.final.q_vectors is not None:
        (out / "final_tables.txt").write_text(format_tables(result.final))
    return 0, result


def cmd_train(config, out_dir):
    return train_and_write(config, out_dir)[0]


def _run_cell(args):
    config, cell_dir = args
    if isinstance(config, Exception):
        return None, None, f"error: {config}"
    try:
        status, result = train_and_write(config, cell_dir)
    except Exception as exc:  # a broken cell must not sink the rest of the sweep
        return None, None, f"error: {exc}"
    if status != 0:
        return None, None, "aborted"
    return result.final.mean_return, greedy_correct(config, result.final), "ok"


def cmd_sweep(base_values, axis, values, out_dir, seeds=None, jobs=1):
    """
    Train one cell per (value, seed) and write ``summary.csv`` once every
    cell has finished. ``base_values`` is the raw key/value dict of the base
    config.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    base = parse_config(overrides=base_values)
    if not hasattr(base, axis):
        raise ConfigError(f"unknown sweep axis {axis!r}", key=axis)
    seeds = list(seeds) if seeds else [base.seed]
    out = Path(out_dir)
    cells = []
    for value in values:
        for seed in seeds:
            try:
                config = parse_config(overrides={**base_values, axis: value, "seed": seed})
            except ConfigError as exc:
                config = exc
            name = f"{axis}={value}" if len(seeds) == 1 else f"{axis}={value}/seed={seed}"
            cells.append((value, seed, config, out / name))
    work = [(c[2], c[3]) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for (value, seed, _, _), (ret, correct, status) in zip(cells, results):
            flag = "" if correct is None else str(correct).lower()
            writer.writerow([value, seed, _num(ret), flag, status])
    return results


def bounds_report(payoff=None, delta=None, gamma=0.0, r_max=None, n_actions=None, n_agents=None,
                  alpha=None, sigma=None):
    """Return the printable diagnostics for the weight and bandwidth limits."""
    if payoff is not None:
        payoff = np.asarray(payoff, dtype=np.float64)
        delta = bounds.delta_s(payoff) if delta is None else delta
        r_max = bounds.payoff_range(payoff) if r_max is None else r_max
        n_actions = payoff.shape[0] if n_actions is None else n_actions
        n_agents = payoff.ndim if n_agents is None else n_agents
    a_bound = bounds.alpha_bound(delta, gamma, r_max, n_actions, n_agents)
    s_bound = bounds.sigma_bound(delta, n_actions, n_agents)
    lines = [
        f"delta_s      = {delta:.10g}",
        f"gamma        = {gamma:.10g}",
        f"r_max        = {r_max:.10g}",
        f"|A|^N        = {n_actions}^{n_agents}",
        f"alpha_bound  = {a_bound:.10g}",
        f"sigma_bound  = {s_bound:.10g}",
    ]
    if alpha is not None:
        verdict = "within" if 0 < alpha < a_bound else "exceeds advisory bound"
        lines.append(f"alpha {alpha:g}: {verdict}")
    if sigma is not None:
        verdict = "within" if 0 < sigma < s_bound else "exceeds advisory bound"
        lines.append(f"sigma {sigma:g}: {verdict}")
    return "\n".join(lines)


# joint actions use the 1-based labels of the navigation action list: 1 still, 2 up, 3 down, 4 left, 5 right
GRIDNAV_EXPECTED = (((3, 1), -10.0, True), ((3, 4), 0.0, False), ((4, 1), 1.0, False), ((4, 4), 0.0, False))


def gridnav_oracle(collision_penalty=10.0, layout=DEFAULT_GRID_LAYOUT):
    """Step every reference joint action from the reference layout; returns (ok, lines)."""
    shape, start, landmarks, _ = parse_grid_layout(layout)
    ok = True
    lines = []
    for (a, b), expected, reverts in GRIDNAV_EXPECTED:
        nxt, reward, collided = gridnav_transition(shape, start, landmarks, [a - 1, b - 1], collision_penalty)
        reverted = bool(np.array_equal(nxt, start))
        match = reward == expected and (reverted == reverts) and collided == reverts
        ok &= match
        note = " revert" if reverted else ""
        lines.append(
            f"A:{a} B:{b} expected {expected:+g}{' revert' if reverts else ''} "
            f"actual {reward:+g}{note} {'ok' if match else 'MISMATCH'}"
        )
    return ok, lines


def _split_list(text, kind=str):
    return [kind(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="mcvd", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", default="runs/train")

    p = sub.add_parser("sweep", help="train one cell per value of a config key")
    p.add_argument("--config")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--seeds", help="comma-separated seeds (default: the config seed)")
    p.add_argument("--out", default="runs/sweep")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("bounds", help="report the weight and bandwidth limits")
    p.add_argument("--payoff", help="inline table like '8,-12,-12;-12,6,6;-12,6,6' (default: the OMG payoff)")
    p.add_argument("--delta", type=float)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-actions", type=int)
    p.add_argument("--n-agents", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma", type=float, default=1.0)

    p = sub.add_parser("gridnav-oracle", help="check the grid navigation reward against the reference payoffs")
    p.add_argument("--collision-penalty", type=float, default=10.0)

    p = sub.add_parser("gradcheck", help="finite-difference check of every backward pass")
    p.add_argument("--seeds", type=int, default=10)
    return parser


def _config_values(path, extra):
    values = parse_text(Path(path).read_text()) if path else {}
    values.update(parse_overrides(extra))
    return values


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if extra and args.command not in ("train", "sweep"):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        if args.command == "train":
            config = parse_config(overrides=_config_values(args.config, extra))
            return cmd_train(config, args.out)

        if args.command == "sweep":
            values = _split_list(args.values)
            seeds = _split_list(args.seeds, int) if args.seeds else None
            results = cmd_sweep(_config_values(args.config, extra), args.axis, values, args.out, seeds, args.jobs)
            print((Path(args.out) / "summary.csv").read_text(), end="")
            return 0 if all(r[2] == "ok" for r in results) else 1

        if args.command == "bounds":
            payoff = None
            if args.delta is None:
                payoff = parse_payoff(args.payoff) if args.payoff else OMG_PAYOFF
            elif args.r_max is None or args.n_actions is None or args.n_agents is None:
                parser.error("--delta needs --r-max, --n-actions and --n-agents")
            print(bounds_report(payoff, args.delta, args.gamma, args.r_max, args.n_actions, args.n_agents,
                                args.alpha, args.sigma))
            return 0

        if args.command == "gridnav-oracle":
            ok, lines = gridnav_oracle(args.collision_penalty)
            print("\n".join(lines))
            return 0 if ok else 1

        if args.command == "gradcheck":
            from .gradcheck import TOLERANCE, run_suite

            worst = run_suite(range(args.seeds))
            for name, err in worst.items():
                print(f"{name:<24} max_rel_error {err:.3e} {'ok' if err < TOLERANCE else 'FAIL'}")
            return 0 if all(e < TOLERANCE for e in worst.values()) else 1
    except (ConfigError, UndefinedGapError, ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
