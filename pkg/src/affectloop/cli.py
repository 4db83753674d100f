"""Command-line front end.

A thin client over the HTTP service: by default requests run in-process
against the ASGI app (no socket, fully deterministic); ``--server URL`` talks
to a remote instance with the same API.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import os
import pathlib
import sys

import httpx

EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_RUNTIME = 3

CONDITIONS = ("nbf", "vibf", "nvibf")
POLICIES = ("explorer", "objective_seeker", "fleer")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is exit 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affectloop", description=__doc__)
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run seeded sessions and write session dirs")
    sim.add_argument("--config", default=None, help="flat key = value config file")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--condition", choices=CONDITIONS, default="nbf")
    sim.add_argument("--duration", type=float, default=120.0)
    sim.add_argument("--policy", choices=POLICIES, default=None)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--runs", type=int, default=1,
                     help="run N sessions with consecutive seeds")
    sim.add_argument("--jobs", type=int, default=1, help="parallel workers")

    cal = sub.add_parser("calibrate", help="fit channel models from calibration data")
    cal.add_argument("--calibration", required=True)
    cal.add_argument("--smoothing-window", type=int, default=5)

    cls = sub.add_parser("classify", help="classify a physiological trace")
    cls.add_argument("--calibration", required=True)
    cls.add_argument("--physio", required=True)
    cls.add_argument("--smoothing-window", type=int, default=5)
    cls.add_argument("--window-seconds", type=float, default=1.0)
    cls.add_argument("--out", default=None, help="AV CSV path (default: stdout)")

    tri = sub.add_parser("triangulate", help="detect emotional responses to events")
    tri.add_argument("--trace", required=True, help="t,arousal,valence CSV")
    tri.add_argument("--events", required=True, help="event log TSV")
    tri.add_argument("--mode", choices=("literal", "deviation"), default="deviation")
    tri.add_argument("--window", type=float, default=10.0)
    tri.add_argument("--out", default=None, help="response CSV path (default: stdout)")
    tri.add_argument("--save", default=None, help="write the session container here")

    rep = sub.add_parser("report", help="summarize a written session directory")
    rep.add_argument("session_dir")

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


class CommandError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code == 422:
        detail = response.json().get("detail")
        if isinstance(detail, dict) and "code" in detail:
            code = EXIT_PARSE if detail["code"] == "parse" else EXIT_RUNTIME
            raise CommandError(code, detail.get("message", "request failed"))
        raise CommandError(EXIT_PARSE, str(detail))
    if response.status_code != 200:
        raise CommandError(EXIT_RUNTIME, f"HTTP {response.status_code}: {response.text}")
    return response.json()


def _read_file(path: str) -> str:
    try:
        return pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc


def _write_file(path: str, content: str) -> None:
    p = pathlib.Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(content, encoding="utf-8", newline="\n")


def cmd_simulate(args, server: str | None) -> int:
    config_text = _read_file(args.config) if args.config else ""
    seed = args.seed
    env_seed = os.environ.get("AFFECTLOOP_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise CommandError(EXIT_USAGE, f"bad AFFECTLOOP_SEED {env_seed!r}") from exc
    if args.runs < 1:
        raise CommandError(EXIT_USAGE, "--runs must be >= 1")
    out_root = pathlib.Path(args.out)

    def one(run_seed: int) -> str:
        with _client(server) as client:
            result = _post(client, "/simulate", {
                "seed": run_seed,
                "condition": args.condition,
                "duration": args.duration,
                "policy": args.policy,
                "config_text": config_text,
            })
        out_dir = out_root if args.runs == 1 else out_root / f"seed-{run_seed}"
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in result["files"].items():
            _write_file(str(out_dir / name), content)
        return f"seed {run_seed}: {result['outcome']} ({result['event_count']} events)"

    seeds = [seed + i for i in range(args.runs)]
    if args.jobs > 1 and len(seeds) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            lines = list(pool.map(one, seeds))
    else:
        lines = [one(s) for s in seeds]
    for line in lines:
        print(line)
    return 0


def cmd_calibrate(args, server: str | None) -> int:
    with _client(server) as client:
        result = _post(client, "/calibrate", {
            "calibration_text": _read_file(args.calibration),
            "smoothing_window": args.smoothing_window,
        })
    for m in result["models"]:
        flag = " (degenerate)" if m["degenerate"] else ""
        print(f"{m['channel']} -> {m['target']}: slope={m['slope']:.6g} "
              f"intercept={m['intercept']:.6g} rss={m['rss']:.6g}{flag}")
    return 0


def cmd_classify(args, server: str | None) -> int:
    with _client(server) as client:
        result = _post(client, "/classify", {
            "calibration_text": _read_file(args.calibration),
            "physio_csv": _read_file(args.physio),
            "smoothing_window": args.smoothing_window,
            "window_seconds": args.window_seconds,
        })
    if args.out:
        _write_file(args.out, result["av_csv"])
    else:
        sys.stdout.write(result["av_csv"])
    return 0


def cmd_triangulate(args, server: str | None) -> int:
    with _client(server) as client:
        result = _post(client, "/triangulate", {
            "trace_csv": _read_file(args.trace),
            "events_tsv": _read_file(args.events),
            "mode": args.mode,
            "window": args.window,
        })
    if args.out:
        _write_file(args.out, result["responses_csv"])
    else:
        sys.stdout.write(result["responses_csv"])
    if args.save:
        _write_file(args.save, result["session_text"])
    for problem in result["problems"]:
        print(f"warning: {problem}", file=sys.stderr)
    print(f"events: {result['events']}")
    print(f"responses: {result['responses']} "
          f"(simple {result['simple']}, composite {result['composite']})")
    print(f"response ratio: {result['response_ratio']:.4f}")
    return 0


def cmd_report(args, server: str | None) -> int:
    session = pathlib.Path(args.session_dir)
    if not session.is_dir():
        raise CommandError(EXIT_PARSE, f"not a session directory: {session}")
    payload = {}
    for key, name in (("events_tsv", "events.tsv"), ("av_csv", "av.csv"),
                      ("directives_tsv", "directives.tsv"),
                      ("outcome_text", "outcome.txt")):
        payload[key] = _read_file(str(session / name))
    with _client(server) as client:
        result = _post(client, "/report", payload)
    sys.stdout.write(result["report_text"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args, args.server)
        if args.command == "calibrate":
            return cmd_calibrate(args, args.server)
        if args.command == "classify":
            return cmd_classify(args, args.server)
        if args.command == "triangulate":
            return cmd_triangulate(args, args.server)
        if args.command == "report":
            return cmd_report(args, args.server)
        if args.command == "serve":
            return cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except CommandError as exc:
        print(f"affectloop: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
