"""Batch CLI: a thin client over the experiment service.

Subcommands: capacity, wiener, massive, parabolic, thorn, selftest, serve.
Each experiment takes a JSON config (schema-validated before any compute;
unknown keys rejected) and writes the service's result files under --out.

Exit codes: 0 ok, 2 config error, 3 numerical non-convergence,
4 window too small, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_WINDOW = 4

_ENDPOINTS = {
    "capacity": "/v1/capacity",
    "wiener": "/v1/wiener",
    "massive": "/v1/massive",
    "parabolic": "/v1/parabolic",
    "thorn": "/v1/thorn",
}


def _load_config(path, command):
    from .service.schemas import CONFIG_MODELS

    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        print(f"config error: no such file: {path}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    except json.JSONDecodeError as e:
        print(f"config error: invalid JSON: {e}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    if raw.get("command", command) != command:
        print(f"config error: config is for command {raw.get('command')!r}, "
              f"invoked as {command!r}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    raw.setdefault("command", command)
    try:
        cfg = CONFIG_MODELS[command].model_validate(raw)
    except ValidationError as e:
        print(f"config error:\n{e}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return cfg


def _request_payload(cfg, command, args):
    from .service.schemas import REQUEST_FIELDS

    fields = set(REQUEST_FIELDS[command].model_fields)
    payload = cfg.model_dump(mode="json", include=fields)
    if args.tol is not None:
        payload["tol"] = args.tol
    if args.threads is not None:
        payload["threads"] = args.threads
    if args.deterministic:
        payload["deterministic"] = True
    return payload


def _write_files(out_dir, files):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content)
        print(f"wrote {out / name}")


def _run_experiment(command, args):
    from .client import ServiceClient

    cfg = _load_config(args.config, command)
    payload = _request_payload(cfg, command, args)
    out_dir = args.out or getattr(cfg, "out", None) or "."
    with ServiceClient(server=args.server) as client:
        status, body = client.post(_ENDPOINTS[command], payload)
    if status == 422:
        print(f"config error (service rejected request): {json.dumps(body)[:800]}",
              file=sys.stderr)
        return EXIT_CONFIG
    if status != 200:
        err = body.get("error", {}) if isinstance(body, dict) else {}
        code = err.get("code", "unknown")
        print(f"error [{code}]: {err.get('message', body)}", file=sys.stderr)
        return EXIT_WINDOW if code == "window_too_small" else 1
    _write_files(out_dir, body.get("files", {}))
    summary = body.get("summary", {})
    print(json.dumps(summary, indent=2, sort_keys=True))
    converged = summary.get("converged", summary.get("converged_all", True))
    if converged is False:
        print("warning: solver did not reach the requested tolerance", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _run_selftest(args):
    from .client import ServiceClient

    with ServiceClient(server=args.server) as client:
        status, body = client.post("/v1/selftest",
                                   {"level": "quick" if args.quick else "full"})
    if status != 200:
        print(f"selftest request failed: {body}", file=sys.stderr)
        return 1
    for chk in body["checks"]:
        print(f"{'PASS' if chk['passed'] else 'FAIL'} {chk['name']}: {chk['detail']}")
    return EXIT_OK if body["passed"] else 1


def _run_serve(args):
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pharmonic",
        description="Discrete nonlinear potential theory experiments on Z^d windows")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, needs_config=True):
        if needs_config:
            sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", default=None, help="output directory (default .)")
        sp.add_argument("--server", default=None,
                        help="service URL; in-process service when omitted")
        sp.add_argument("--deterministic", action="store_true",
                        help="suppress timestamp headers for byte-identical outputs")
        sp.add_argument("--threads", type=int, default=None,
                        help="threads for color-class sweeps")
        sp.add_argument("--tol", type=float, default=None,
                        help="override the config solver tolerance")

    for cmd, help_text in [
        ("capacity", "condenser capacity on a lattice window"),
        ("wiener", "dyadic capacitary series report"),
        ("massive", "massiveness sequence v_k(x0) across radii"),
        ("parabolic", "capacity-to-radius parabolicity sequence"),
        ("thorn", "thorn-set series preset (power profile)"),
    ]:
        add_common(sub.add_parser(cmd, help=help_text))

    st = sub.add_parser("selftest", help="run the invariant battery")
    st.add_argument("--quick", action="store_true")
    st.add_argument("--server", default=None)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8711)

    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return _run_selftest(args)
        if args.command == "serve":
            return _run_serve(args)
        return _run_experiment(args.command, args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1


if __name__ == "__main__":
    sys.exit(main())
