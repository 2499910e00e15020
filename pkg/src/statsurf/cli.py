"""Command-line client.

Every subcommand builds a RunConfig and hands it to ``run``, which posts
one request to the service: an in-process app instance by default, or a
remote server when --server is given.  Responses are emitted verbatim as
JSON, or reshaped to CSV for the tabular commands; floats in CSV use
Python's shortest round-trip repr.

Exit codes: 0 success, 2 validation error, 3 verification-suite failure.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import click
import httpx

DEFAULT_SEED = 0xC0FFEE


@dataclass
class RunConfig:
    command: str
    model_path: str | None = None
    point: str | None = None
    deformation_path: str | None = None
    delta_f: str | None = None
    shift_v: str | None = None
    shift_tau: float | None = None
    as_printed: bool = False
    steps: int | None = None
    shift: str = "auto"
    m: int | None = None
    seed: int = DEFAULT_SEED
    c_min: float | None = None
    c_max: float | None = None
    tol: float = 1e-8
    region_path: str | None = None
    samples: int | None = None
    server: str | None = None


class _CliError(Exception):
    pass


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise _CliError(f"cannot read {what} file {path!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise _CliError(f"{what} file {path!r} is not valid JSON: {e}") from e


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as e:
        raise _CliError(f"{what} must be comma-separated decimals, got {text!r}") from e


def _deformation_doc(cfg: RunConfig) -> dict:
    inline = [name for name, val in (
        ("--delta-f", cfg.delta_f),
        ("--shift-v", cfg.shift_v),
    ) if val is not None]
    if cfg.deformation_path is not None and inline:
        raise _CliError(
            f"both a deformation file and inline {inline[0]} were given; pass exactly one"
        )
    if cfg.deformation_path is not None:
        return _load_json(cfg.deformation_path, "deformation")
    if cfg.delta_f is not None and cfg.shift_v is not None:
        raise _CliError("pass either --delta-f or --shift-v, not both")
    if cfg.delta_f is not None:
        return {"delta_f": _parse_floats(cfg.delta_f, "--delta-f")}
    if cfg.shift_v is not None:
        if cfg.shift_tau is None:
            raise _CliError("--shift-v needs --shift-tau")
        return {"shift": {"v": _parse_floats(cfg.shift_v, "--shift-v"), "tau": cfg.shift_tau}}
    raise _CliError("no deformation given; pass --deformation, --delta-f, or --shift-v")


def _request(cfg: RunConfig) -> tuple[str, dict]:
    if cfg.command == "geom":
        return "/geom/at", {
            "model": _load_json(cfg.model_path, "model"),
            "point": _parse_floats(cfg.point, "--point"),
        }
    if cfg.command == "deform":
        return "/deform/report", {
            "model": _load_json(cfg.model_path, "model"),
            "point": _parse_floats(cfg.point, "--point"),
            "deformation": _deformation_doc(cfg),
            "as_printed": cfg.as_printed,
        }
    if cfg.command == "replicator":
        shift: float | str = cfg.shift
        if shift != "auto":
            try:
                shift = float(shift)
            except ValueError as e:
                raise _CliError(f"--shift must be 'auto' or a number, got {cfg.shift!r}") from e
        return "/replicator/run", {
            "model": _load_json(cfg.model_path, "model"),
            "point": _parse_floats(cfg.point, "--point"),
            "steps": cfg.steps,
            "shift": shift,
        }
    if cfg.command == "potential-verify":
        return "/potential/verify", {"m": cfg.m, "seed": cfg.seed}
    if cfg.command == "sweep":
        return "/sweep/s2", {
            "c_min": cfg.c_min, "c_max": cfg.c_max, "steps": cfg.steps, "tol": cfg.tol,
        }
    if cfg.command == "volume-check":
        return "/volume/check", {
            "region": _load_json(cfg.region_path, "region"),
            "samples": cfg.samples,
            "seed": cfg.seed,
        }
    if cfg.command == "verify-all":
        return "/verify/all", {"seed": cfg.seed}
    raise _CliError(f"unknown command {cfg.command!r}")


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(cfg: RunConfig, payload: dict) -> int:
    if cfg.command == "replicator":
        m = len(payload["weights"][0])
        header = ["step"] + [f"w_{a + 1}" for a in range(m)] + ["S"]
        sys.stdout.write(",".join(header) + "\n")
        for step, (w_row, s) in enumerate(zip(payload["weights"], payload["entropies"])):
            sys.stdout.write(",".join([str(step)] + [_num(v) for v in w_row] + [_num(s)]) + "\n")
        return 0
    if cfg.command == "sweep":
        sys.stdout.write("c,closed,quadrature,asymptote,ratio\n")
        for row in payload["rows"]:
            sys.stdout.write(",".join(
                _num(row[k]) for k in ("c", "closed", "quadrature", "asymptote", "ratio")
            ) + "\n")
        return 0
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    if cfg.command in ("verify-all", "potential-verify") and not payload.get("passed", False):
        return 3
    return 0


def run(cfg: RunConfig) -> int:
    """Send one request for the config and emit the response; exit status back."""
    try:
        path, body = _request(cfg)
    except _CliError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    try:
        if cfg.server is None:
            import warnings

            with warnings.catch_warnings():
                # starlette nags for httpx2, which this environment lacks
                warnings.simplefilter("ignore")
                from starlette.testclient import TestClient

            from .service.app import create_app

            with TestClient(create_app(), raise_server_exceptions=False) as client:
                resp = client.post(path, json=body)
        else:
            with httpx.Client(base_url=cfg.server, timeout=600.0) as client:
                resp = client.post(path, json=body)
    except httpx.HTTPError as e:
        sys.stderr.write(f"error: cannot reach server: {e}\n")
        return 2
    if resp.status_code != 200:
        try:
            detail = resp.json()
        except ValueError:
            detail = {"error": resp.text}
        message = detail.get("error") or json.dumps(detail)
        sys.stderr.write(f"error: {message}\n")
        return 2
    return _emit(cfg, resp.json())


_server_option = click.option("--server", default=None, metavar="URL",
                              help="Remote service URL; default runs in-process.")


@click.group()
def main() -> None:
    """Statistical hypersurfaces: geometry, deformations, dynamics, integrals."""


@main.group()
def geom() -> None:
    """Pointwise geometry reports."""


@geom.command("at")
@click.argument("model_path", metavar="MODEL")
@click.option("--point", required=True, help="Comma-separated coordinates.")
@_server_option
def geom_at(model_path: str, point: str, server: str | None) -> None:
    """Geometry report for MODEL at a point, as JSON."""
    sys.exit(run(RunConfig(command="geom", model_path=model_path, point=point, server=server)))


@main.group()
def deform() -> None:
    """Deformation analysis."""


@deform.command("report")
@click.argument("model_path", metavar="MODEL")
@click.option("--point", required=True, help="Comma-separated coordinates.")
@click.option("--deformation", "deformation_path", default=None, metavar="FILE",
              help="Deformation document (JSON file).")
@click.option("--delta-f", default=None, help="Inline constant deltas, comma-separated.")
@click.option("--shift-v", default=None, help="Inline coordinate-shift direction.")
@click.option("--shift-tau", type=float, default=None, help="Coordinate-shift magnitude.")
@click.option("--as-printed", is_flag=True, help="Use the uncorrected curvature-variation coefficient.")
@_server_option
def deform_report(model_path, point, deformation_path, delta_f, shift_v, shift_tau,
                  as_printed, server) -> None:
    """Variation report for MODEL at a point, as JSON."""
    sys.exit(run(RunConfig(
        command="deform", model_path=model_path, point=point,
        deformation_path=deformation_path, delta_f=delta_f,
        shift_v=shift_v, shift_tau=shift_tau, as_printed=as_printed, server=server,
    )))


@main.group()
def replicator() -> None:
    """Discrete replicator dynamics."""


@replicator.command("run")
@click.option("--model", "model_path", required=True, metavar="MODEL")
@click.option("--point", required=True, help="Comma-separated coordinates.")
@click.option("--steps", type=int, required=True)
@click.option("--shift", default="auto", help="'auto' or an additive fitness constant.")
@_server_option
def replicator_run(model_path, point, steps, shift, server) -> None:
    """Run the orbit and emit CSV: step, w_1..w_m, S."""
    sys.exit(run(RunConfig(
        command="replicator", model_path=model_path, point=point,
        steps=steps, shift=shift, server=server,
    )))


@main.group()
def potential() -> None:
    """Weight-potential reconstruction."""


@potential.command("verify")
@click.option("--m", type=int, required=True, help="Number of weights.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_server_option
def potential_verify(m, seed, server) -> None:
    """Round-trip and path-independence residuals, as JSON."""
    sys.exit(run(RunConfig(command="potential-verify", m=m, seed=seed, server=server)))


@main.group()
def sweep() -> None:
    """Parameter sweeps."""


@sweep.command("s2")
@click.option("--c-min", type=float, required=True)
@click.option("--c-max", type=float, required=True)
@click.option("--steps", type=int, required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True,
              help="Quadrature tolerance per point.")
@_server_option
def sweep_s2(c_min, c_max, steps, tol, server) -> None:
    """Entropy integral over [-c,c]^2: CSV of c, closed, quadrature, asymptote, ratio."""
    sys.exit(run(RunConfig(command="sweep", c_min=c_min, c_max=c_max, steps=steps,
                           tol=tol, server=server)))


@main.group()
def volume() -> None:
    """Cone-region volume identities."""


@volume.command("check")
@click.option("--region", "region_path", required=True, metavar="FILE")
@click.option("--samples", type=int, required=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_server_option
def volume_check(region_path, samples, seed, server) -> None:
    """Compare patch entropy difference with (n+1) * MC volume, as JSON."""
    sys.exit(run(RunConfig(command="volume-check", region_path=region_path,
                           samples=samples, seed=seed, server=server)))


@main.command("verify-all")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_server_option
def verify_all(seed, server) -> None:
    """Run every module's self-check suite; exit 3 if any check fails."""
    sys.exit(run(RunConfig(command="verify-all", seed=seed, server=server)))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
