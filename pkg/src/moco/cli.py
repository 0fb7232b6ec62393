"""Command line entry points: explain, benchmark, serve.

Exit codes: 1 for configuration problems (bad flags, unreadable or
inconsistent files), 2 for model failures. Diagnostics go to stderr.
"""

from __future__ import annotations

import socket
import sys

import click

from .benchmark import ManifestError, load_manifest, run_benchmark
from .evolution import ConfigInvalid
from .feature_space import MissingValue, ParseError, SchemaMismatch
from .model_adapter import ExternalProcessFailure
from .objectives import DesiredOutcome
from .runio import ExplainRequest, execute_explain

CONFIG_ERRORS = (SchemaMismatch, MissingValue, ParseError, ConfigInvalid, ManifestError, ValueError, OSError)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_bounds(pairs: tuple[str, ...]) -> dict:
    bounds = {}
    for spec in pairs:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad --bounds {spec!r}; expected name:lower:upper")
        bounds[parts[0]] = (float(parts[1]), float(parts[2]))
    return bounds


def _parse_surface(spec: str | None) -> tuple[str, str, int] | None:
    if spec is None:
        return None
    parts = spec.split(",")
    if len(parts) != 3:
        raise ValueError(f"bad --surface {spec!r}; expected f1,f2,resolution")
    return parts[0], parts[1], int(parts[2])


@click.group()
def main():
    """Multi-objective counterfactual search for tabular prediction models."""


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option("--schema", "schema_path", required=True, type=click.Path(dir_okay=False))
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--row", type=int, required=True, help="0-based row index of the instance to explain")
@click.option("--target", required=True, help="desired prediction: 'a:b' ('(' opens the lower, ')' the upper endpoint), a single value, or 'auto'")
@click.option("--pop", type=int, default=20, show_default=True)
@click.option("--generations", type=int, default=175, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epsilon", type=float, default=None, help="penalize candidates whose o1 exceeds this threshold")
@click.option("--freeze", default="", help="comma-separated features kept at the original value")
@click.option("--bounds", multiple=True, help="name:lower:upper capping bounds; repeatable")
@click.option("--no-ice-init", is_flag=True, help="initialize with a flat 0.5 deviation probability")
@click.option("--no-conditional", is_flag=True, help="use the unconditional mutation operators")
@click.option("--k", type=int, default=1, show_default=True, help="neighbors in the plausibility objective")
@click.option("--limit", type=int, default=10, show_default=True, help="counterfactuals kept for display")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--surface", default=None, help="f1,f2,resolution: also write a response-surface grid")
def explain(data_path, schema_path, model_path, row, target, pop, generations, seed, epsilon,
            freeze, bounds, no_ice_init, no_conditional, k, limit, out_dir, surface):
    """Search counterfactuals for one instance and write a run directory."""
    try:
        request = ExplainRequest(
            data_path=data_path,
            schema_path=schema_path,
            model_path=model_path,
            row=row,
            target=target,
            pop=pop,
            generations=generations,
            seed=seed,
            epsilon=epsilon,
            freeze=[f for f in freeze.split(",") if f],
            bounds=_parse_bounds(bounds),
            use_ice_init=not no_ice_init,
            use_conditional_mutator=not no_conditional,
            k=k,
            limit=limit,
            surface=_parse_surface(surface),
        )
        payload = execute_explain(request, out_dir)
    except ExternalProcessFailure as exc:
        _fail(str(exc), 2)
    except CONFIG_ERRORS as exc:
        _fail(str(exc), 1)
    t = payload["target"]
    outcome = DesiredOutcome(t["lower"], t["upper"], t["lower_open"], t["upper_open"])
    n = len(payload["nondominated"])
    attaining = sum(1 for e in payload["nondominated"] if outcome.contains(e["prediction"]))
    click.echo(f"{n} nondominated counterfactuals ({attaining} in the target range) -> {out_dir}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def benchmark(manifest_path, out_dir):
    """Run search variants and random search over a manifest of instances."""
    try:
        manifest = load_manifest(manifest_path)
        summary = run_benchmark(manifest, out_dir, progress=lambda msg: click.echo(msg, err=True))
    except ExternalProcessFailure as exc:
        _fail(str(exc), 2)
    except CONFIG_ERRORS as exc:
        _fail(str(exc), 1)
    for method, rank in summary["mean_final_rank"].items():
        click.echo(f"{method}: mean final hv rank {rank:.2f}")


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--runs-dir", "runs_dir", default=None, type=click.Path(file_okay=False))
def serve(port, host, data_dir, runs_dir):
    """Serve the exploration API over HTTP."""
    import uvicorn

    from .service import create_app

    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        _fail(f"cannot bind {host}:{port}: {exc}", 1)
    try:
        app = create_app(data_dir, runs_dir)
    except CONFIG_ERRORS as exc:
        _fail(str(exc), 1)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
