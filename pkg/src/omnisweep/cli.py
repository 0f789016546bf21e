"""Thin command-line client for the omnisweep service.

By default the CLI spins up the service in-process and talks to it over
an in-memory HTTP transport, so every verb works standalone; pass
``--server URL`` to target a running instance instead (start one with
``omnisweep serve``).  Configuration comes from a JSON file (``--config``)
plus per-field override flags; results and file outputs land on the side
executing the pipeline (locally in the default mode).
"""

from __future__ import annotations

import argparse
import json
import sys


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omnisweep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--server", help="base URL of a running service (default: in-process)")
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--rig-file", dest="rig_file")
        p.add_argument("--suite", dest="scenes.suite")
        p.add_argument("--scene-count", dest="scenes.count", type=int)
        p.add_argument("--scene-file", dest="scenes.file")
        p.add_argument("--erp-width", dest="erp_width", type=int)
        p.add_argument("--erp-height", dest="erp_height", type=int)
        p.add_argument("--num-bins", dest="num_bins", type=int)
        p.add_argument("--d-min", dest="d_min", type=float)
        p.add_argument("--d-max", dest="d_max", type=float)
        p.add_argument("--temperature", dest="fusion.temperature", type=float)
        p.add_argument("--top-k", dest="fusion.top_k", type=int)
        p.add_argument("--fusion-variant", dest="fusion.variant",
                       choices=["topk", "softmax", "mean"])
        p.add_argument("--iterations", dest="refine.iterations", type=int)
        p.add_argument("--lookup-radius", dest="refine.lookup_radius", type=int)
        p.add_argument("--no-smooth", dest="refine.smooth", action="store_false", default=None)
        p.add_argument("--corruption", dest="corruption.enabled", action="store_true", default=None)
        p.add_argument("--noise-amplitude", dest="corruption.noise_amplitude", type=float)
        p.add_argument("--write-metric-depth", dest="write_metric_depth",
                       action="store_true", default=None)
        p.add_argument("--seed", dest="seed", type=int)

    for verb in ("generate", "run"):
        add_common(sub.add_parser(verb, help=f"{verb} via the service"))
    ab = sub.add_parser("ablate", help="run all (or selected) ablation variants")
    add_common(ab)
    ab.add_argument("--variants", nargs="+", help="subset of variants to run")

    rep = sub.add_parser("report", help="combine metrics CSVs into one report")
    rep.add_argument("entries", nargs="+", metavar="LABEL=CSV",
                     help="labeled metrics files, e.g. clean=out/clean/metrics.csv")
    rep.add_argument("--output", help="write the combined CSV here")
    rep.add_argument("--server", help="base URL of a running service")

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def _load_config_doc(args) -> dict:
    doc: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            doc = json.load(f)
    for key, value in vars(args).items():
        if "." in key or key in (
            "output_dir", "rig_file", "erp_width", "erp_height", "num_bins",
            "d_min", "d_max", "write_metric_depth", "seed",
        ):
            if value is None:
                continue
            target = doc
            parts = key.split(".")
            for part in parts[:-1]:
                target = target.setdefault(part, {})
            target[parts[-1]] = value
    if "output_dir" not in doc:
        raise SystemExit("error: output_dir is required (flag or config file)")
    return doc


def _make_client(server: str | None):
    import httpx

    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise SystemExit(f"error: {path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _metrics_line(row: dict) -> str:
    return (f"{row['label']}: >1 {row['gt1']:.2f}%  >3 {row['gt3']:.2f}%  "
            f">5 {row['gt5']:.2f}%  MAE {row['mae']:.4f}  RMSE {row['rmse']:.4f}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            import uvicorn

            from .service import create_app

            uvicorn.run(create_app(), host=args.host, port=args.port)
            return 0

        client = _make_client(args.server)
        if args.command == "generate":
            out = _post(client, "/generate", _load_config_doc(args))
            print(f"generated {out['samples']} samples ({out['images']} images) in {out['output_dir']}")
        elif args.command == "run":
            out = _post(client, "/run", _load_config_doc(args))
            for row in out["per_sample"]:
                print(_metrics_line(row))
            print(_metrics_line(out["summary"]))
            print(f"metrics written to {out['metrics_csv']}")
        elif args.command == "ablate":
            payload = {"config": _load_config_doc(args), "variants": args.variants}
            out = _post(client, "/ablate", payload)
            for row in out["rows"]:
                print(_metrics_line(row))
            print(f"ablation table written to {out['csv_path']}")
        elif args.command == "report":
            entries = []
            for item in args.entries:
                if "=" not in item:
                    raise SystemExit(f"error: report entries look like LABEL=CSV, got {item!r}")
                label, path = item.split("=", 1)
                entries.append({"label": label, "metrics_csv": path})
            out = _post(client, "/report", {"entries": entries, "output_path": args.output})
            print(out["csv_text"], end="")
        return 0
    except SystemExit as e:
        if isinstance(e.code, str):
            print(e.code, file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
