import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from nrlight.config import RunConfig, config_error, load_config, load_runtime_env, resolve_output_path, serialize_config
from nrlight.dynamics import DEFAULT_HOLD, hysteresis_loop, observed_output
from nrlight.errors import ConfigError, NrlightError, SweepCancelled, UndefinedRatio
from nrlight.experiments.runner import run_scenario
from nrlight.experiments.scenarios import list_scenarios
from nrlight.experiments.sweep import sweep
from nrlight.experiments.utils import build_metadata
from nrlight.mean_field import pt_balance
from nrlight.models import Direction, SweepResult, SystemParams
from nrlight.observables import isolation_ratio, transmission
from nrlight.serialization import render_plot_script, save_result, write_result
from nrlight.steady import NEWTON_MAX_ITER, bistable_window, enumerate_branches

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2

HYSTERESIS_DEFAULTS = {"t_hold": DEFAULT_HOLD, "rtol": 1e-7, "atol": 1e-10, "newton_max_iter": NEWTON_MAX_ITER}

PARAM_FLAGS = {
    "g": "g",
    "J": "J",
    "kappa1": "kappa1",
    "kappa_e": "kappa-e",
    "gamma": "gamma",
    "delta1": "delta1",
    "delta2": "delta2",
    "eps_p": "eps-p",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run config; flags override its params")
    for field, flag in PARAM_FLAGS.items():
        parser.add_argument(f"--{flag}", dest=field, type=float, default=None)


def _add_direction(parser: argparse.ArgumentParser, allow_both: bool = True) -> None:
    choices = ["forward", "backward", "both"] if allow_both else ["forward", "backward"]
    parser.add_argument("--dir", dest="direction", choices=choices, default="both" if allow_both else "forward")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nrlight", description="Nonreciprocal transmission of a PT-symmetric cavity pair with one emitter.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    steady = sub.add_parser("steady", help="all steady branches and their transmission at one point")
    _add_param_flags(steady)
    _add_direction(steady)

    stability = sub.add_parser("stability", help="Jacobian eigenvalues of every steady branch")
    _add_param_flags(stability)
    _add_direction(stability)

    sweep_cmd = sub.add_parser("sweep", help="run the sweep described by a config file")
    sweep_cmd.add_argument("config")
    sweep_cmd.add_argument("--out")
    sweep_cmd.add_argument("--format", choices=["csv", "json"])
    sweep_cmd.add_argument("--workers", type=int)

    hysteresis = sub.add_parser("hysteresis", help="quasi-static up/down drive scan")
    _add_param_flags(hysteresis)
    _add_direction(hysteresis, allow_both=False)
    hysteresis.add_argument("--eps-max", dest="eps_max", type=float, default=1.0, help="largest eps_p^2")
    hysteresis.add_argument("--points", type=int, default=41)
    hysteresis.add_argument("--t-hold", dest="t_hold", type=float, help="hold time per drive value (default: config solver.t_hold)")
    hysteresis.add_argument("--rtol", type=float, help="default: config solver.rtol, else 1e-7")
    hysteresis.add_argument("--atol", type=float, help="default: config solver.atol, else 1e-10")

    figure = sub.add_parser("figure", help="run a named scenario")
    figure.add_argument("scenario", nargs="?")
    figure.add_argument("--list", action="store_true", help="print the scenario ids")
    figure.add_argument("--out")
    figure.add_argument("--format", choices=["csv", "json"])
    figure.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    figure.add_argument("--workers", type=int)
    figure.add_argument("--no-cache", dest="no_cache", action="store_true")
    figure.add_argument("--plot-script", dest="plot_script")

    validate = sub.add_parser("validate", help="parse and echo a config file")
    validate.add_argument("config")
    return parser


class NrlightCli:
    def __init__(self, out=None) -> None:
        self._out = out or sys.stdout

    def _print(self, text: str = "") -> None:
        print(text, file=self._out)

    def run(self, args: argparse.Namespace) -> int:
        handler = getattr(self, f"_cmd_{args.command}")
        return handler(args)

    def _params(self, args: argparse.Namespace) -> SystemParams:
        base = load_config(args.config).params if args.config else SystemParams()
        changes = {field: getattr(args, field) for field in PARAM_FLAGS if getattr(args, field) is not None}
        try:
            return base.replace(**changes)
        except ValidationError as exc:
            raise config_error(exc) from exc

    def _hysteresis_settings(self, args: argparse.Namespace) -> Dict[str, Any]:
        """Flags over config `solver` over the built-in scan defaults."""
        settings: Dict[str, Any] = dict(HYSTERESIS_DEFAULTS)
        if args.config:
            settings.update(load_config(args.config).solver.model_dump(exclude_unset=True))
        for key in ("t_hold", "rtol", "atol"):
            if getattr(args, key) is not None:
                settings[key] = getattr(args, key)
        return settings

    @staticmethod
    def _directions(choice: str) -> List[Direction]:
        if choice == "both":
            return [Direction.FORWARD, Direction.BACKWARD]
        return [Direction(choice)]

    def _cmd_steady(self, args: argparse.Namespace) -> int:
        params = self._params(args)
        self._print(f"params: {json.dumps(params.model_dump(), sort_keys=True)}")
        self._print(f"pt_balance: {pt_balance(params)!r}")
        selected: Dict[Direction, float] = {}
        observed_only = False
        for direction in self._directions(args.direction):
            branches = enumerate_branches(params, direction)
            window = bistable_window(params, direction) if params.g > 0 else None
            window_text = f"[{window[0]:.6g}, {window[1]:.6g}]" if window else "none"
            self._print(f"{direction.value}: {len(branches)} branch(es), bistable eps_p^2 window {window_text}")
            stable = [index for index, branch in enumerate(branches) if branch.is_stable]
            for index, branch in enumerate(branches):
                line = f"  [{index}] I1={branch.I1:.6e} {branch.stability.value} residual={branch.residual:.1e}"
                if params.eps_p > 0:
                    record = transmission(params, direction, branch)
                    line += f" T={record.T:.6f}"
                    if stable and index == stable[0]:
                        selected[direction] = record.T
                        line += " selected"
                self._print(line)
            if stable or params.eps_p == 0:
                continue
            observed = observed_output(params, direction)
            if observed.T is None:
                self._print(f"  no stable branch; time-domain run: {observed.kind.value}")
                continue
            self._print(
                f"  no stable branch; observed T={observed.T:.6f} "
                f"(I1 {observed.I1_min:.3e}..{observed.I1_max:.3e}, {observed.kind.value})"
            )
            selected[direction] = observed.T
            observed_only = True
        if len(selected) == 2:
            source = "observed output" if observed_only else "selected branches"
            try:
                ratio = isolation_ratio(selected[Direction.BACKWARD], selected[Direction.FORWARD])
                self._print(f"isolation ({source}): {ratio:.3f} dB")
            except UndefinedRatio as exc:
                self._print(f"isolation ({source}): undefined ({exc.signed_limit})")
        return EXIT_OK

    def _cmd_stability(self, args: argparse.Namespace) -> int:
        params = self._params(args)
        for direction in self._directions(args.direction):
            self._print(f"{direction.value}:")
            for index, branch in enumerate(enumerate_branches(params, direction)):
                self._print(f"  [{index}] I1={branch.I1:.6e} {branch.stability.value} max Re={branch.max_real_part:.6e}")
                for value in branch.eigenvalues:
                    self._print(f"      {value.real:+.6e} {value.imag:+.6e}i")
        return EXIT_OK

    def _cmd_hysteresis(self, args: argparse.Namespace) -> int:
        params = self._params(args)
        direction = Direction(args.direction)
        loop = hysteresis_loop(params, direction, args.eps_max, args.points, **self._hysteresis_settings(args))
        self._print(f"{direction.value} hysteresis, {args.points} points up to eps_p^2={args.eps_max!r}")
        self._print(f"up jump: {loop.up_jump}  down jump: {loop.down_jump}  width: {loop.width!r}")
        for label, steps in (("up", loop.up), ("down", loop.down)):
            for step in steps:
                self._print(f"{label} {step.eps_p_sq!r} {step.I1!r} {step.kind.value}")
        return EXIT_OK

    def _emit(self, result: SweepResult, out: Optional[str], fmt: Optional[str]) -> None:
        if out:
            path = save_result(result, resolve_output_path(out), fmt)
            self._print(f"wrote {len(result.rows)} rows to {path}")
        else:
            self._out.write(write_result(result, fmt or "csv").decode("utf-8"))

    def _cmd_sweep(self, args: argparse.Namespace) -> int:
        config = load_config(args.config)
        workers = args.workers or load_runtime_env().threads
        fmt = args.format or config.output.format
        out = args.out or config.output.path
        if config.scenario is not None:
            result = run_scenario(config.scenario, config.scenario_overrides(), workers=workers)
        elif config.sweep is not None:
            result = sweep(
                config.sweep,
                config.params,
                workers=workers,
                metadata=build_metadata(params=config.params, spec=config.sweep, extra={"config": config.model_dump(mode="json")}),
            )
        else:
            raise ConfigError("config names neither a scenario nor a sweep", path="sweep")
        self._emit(result, out, fmt)
        return EXIT_OK

    def _cmd_figure(self, args: argparse.Namespace) -> int:
        if args.list:
            for scenario_id in list_scenarios():
                self._print(scenario_id)
            return EXIT_OK
        if not args.scenario:
            raise UsageError("figure: a scenario id is required (see --list)")
        overrides = _parse_overrides(args.overrides)
        result = run_scenario(args.scenario, overrides, workers=args.workers, use_cache=not args.no_cache)
        self._emit(result, args.out, args.format)
        if args.plot_script:
            data_path = resolve_output_path(args.out) if args.out else "data.csv"
            with open(resolve_output_path(args.plot_script), "w", encoding="utf-8") as handle:
                handle.write(render_plot_script(result, data_path))
        return EXIT_OK

    def _cmd_validate(self, args: argparse.Namespace) -> int:
        config: RunConfig = load_config(args.config)
        self._out.write(serialize_config(config))
        return EXIT_OK


def _parse_overrides(items: Sequence[str]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            overrides[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key.strip()] = raw
    return overrides


def _configure_logging() -> None:
    try:
        level = load_runtime_env().log_level
    except ConfigError:
        level = "WARNING"
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        return NrlightCli(out).run(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SweepCancelled:
        print("cancelled", file=sys.stderr)
        return EXIT_SOLVER
    except NrlightError as exc:
        print(f"solver error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        target = exc.filename or ""
        print(f"cannot write {target}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
