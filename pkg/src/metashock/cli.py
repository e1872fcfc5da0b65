"""Command line entry point: ``metashock <mode> [flags]`` or ``metashock run --config FILE``."""

import argparse
import json
import sys

from .errors import ConfigError
from .harness import config_from_dict, load_config, run


def _floats(text):
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def _u0(text):
    if text in ("table", "linear"):
        return text
    return _floats(text)


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--flux", default="burgers", choices=["burgers", "quartic"])
    common.add_argument("--eps", type=_floats, default=None,
                        help="one value or a comma separated list")
    common.add_argument("--out", dest="output_dir", default=None,
                        help="output directory (METASHOCK_OUT takes precedence)")
    common.add_argument("--threads", type=int, default=None)

    parser = argparse.ArgumentParser(prog="metashock", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", parents=[common], help="matched family and residuals")
    p.add_argument("--xi", type=_floats, default=[0.0])
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues of the linearised operator")
    p.add_argument("--xi", type=_floats, default=[0.0])
    p.add_argument("--n", type=int, default=400)

    p = sub.add_parser("evolve", parents=[common], help="full time integration")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--u0", type=_u0, default="table",
                   help="'table', 'linear' or ascending polynomial coefficients c0,c1,...")
    p.add_argument("--samples", dest="sample_times", type=_floats, default=None)
    p.add_argument("--snapshots", action="store_true", help="write x,u,v at every sample time")
    p.add_argument("--allow-long", action="store_true", help="permit tmax beyond 1e4")

    p = sub.add_parser("reduced", parents=[common], help="reduced equation for the layer position")
    p.add_argument("--xi0", type=float, required=True)
    p.add_argument("--theta", default="projection", choices=["projection", "asymptotic"])
    p.add_argument("--tmax", type=float, default=1e4)
    p.add_argument("--samples", dest="sample_times", type=_floats, default=None)

    p = sub.add_parser("table-repro", parents=[common], help="shock-position table comparison")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--samples", dest="sample_times", type=_floats, default=None)

    p = sub.add_parser("asymptotics", parents=[common], help="asymptotic formulas on a xi grid")
    p.add_argument("--xi", type=_floats, default=[0.0])

    p = sub.add_parser("run", help="run a JSON configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=None)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config)
        else:
            fields = {k: v for k, v in vars(args).items()
                      if k not in ("command",) and v is not None and v is not False}
            fields["mode"] = args.command
            config = config_from_dict(fields)
    except (ConfigError, OSError) as exc:
        print(f"metashock: {exc}", file=sys.stderr)
        return 2
    manifest = run(config, threads=args.threads)
    for record in manifest.runs:
        if record["status"] != "ok":
            print(f"metashock: {record['name']} failed: {record['error']}", file=sys.stderr)
    print(json.dumps({"manifest": manifest.path, "ok": manifest.ok}))
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
