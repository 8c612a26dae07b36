"""Command-line client for the decoding laboratory.

Subcommands orchestrate the pipeline through the service API (in-process
by default, remote with --server): build schedules, train reshuffles,
export pairwise-inversion matrices, run BLER / query-count benchmarks and
the oracle property suite. All file I/O happens client-side; every run
echoes its fully resolved configuration to stdout.

Exit codes: 0 ok, 2 usage, 3 I/O failure, 4 verification failure.
"""

from __future__ import annotations

import os
import sys

import click
import numpy as np

from .errors import FileFormatError, InvalidParameterError
from .patterns import Schedule, load_schedule, save_schedule
from .reshuffle import (
    ReshuffleModel,
    RMatrix,
    export_rmatrix,
    load_reshuffle_model,
    save_reshuffle_model,
)
from .simulate import SimRecord, write_manifest, write_records_csv
from .service.client import ServiceClient, ServiceError

TABLE_DECODERS = ("orbgrand", "cdf-orbgrand", "3line-orbgrand", "rs-orbgrand", "sgrand")


class IOFailure(click.ClickException):
    exit_code = 3


def _echo_config(pairs: dict) -> None:
    for key in sorted(pairs):
        click.echo(f"config {key}={pairs[key]}")


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj.get("server"))


def _io(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except FileNotFoundError as exc:
        raise IOFailure(f"{exc}") from None
    except FileFormatError as exc:
        raise IOFailure(f"bad file format: {exc}") from None
    except OSError as exc:
        raise IOFailure(f"{exc}") from None


def _post(client: ServiceClient, path: str, payload: dict) -> dict:
    try:
        return client.post(path, payload)
    except ServiceError as exc:
        if exc.status_code in (400, 422):
            raise click.UsageError(exc.detail)
        raise click.ClickException(str(exc))
    except Exception as exc:  # connection problems to a remote server
        raise IOFailure(f"service unreachable: {exc}") from None


def _schedule_payload(s: Schedule) -> dict:
    return {"n": s.n, "kind": s.weight_kind, "patterns": [list(p) for p in s.patterns]}


def _payload_schedule(d: dict) -> Schedule:
    return Schedule(patterns=[tuple(p) for p in d["patterns"]], n=d["n"], weight_kind=d["kind"])


@click.group()
@click.option("--server", default=None, help="Remote service URL; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Decoding laboratory for GRAND-family soft-decision decoders."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.group()
def schedule():
    """Build and inspect query schedules."""


@schedule.command("build")
@click.option("--weight", type=click.Choice(["unit", "rank", "cdf", "3line"]), required=True)
@click.option("--n", type=click.IntRange(min=1, max=128), required=True)
@click.option("--count", type=click.IntRange(min=1), default=50000, show_default=True)
@click.option("--sigma", type=float, default=None, help="Noise level (cdf/3line weights).")
@click.option("--mc-samples", type=click.IntRange(min=10**4), default=10**5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def schedule_build(ctx, weight, n, count, sigma, mc_samples, seed, out):
    """Write a schedule file ordered by accumulated weight."""
    _echo_config(
        {"weight": weight, "n": n, "count": count, "sigma": sigma, "mc_samples": mc_samples,
         "seed": seed, "out": out}
    )
    client = _client(ctx)
    resp = _post(
        client,
        "/schedules/build",
        {"weight": weight, "n": n, "count": count, "sigma": sigma,
         "mc_samples": mc_samples, "seed": seed},
    )
    sched = _payload_schedule(resp["schedule"])
    _io(save_schedule, sched, out)
    click.echo(f"wrote {out}: {sched.length} patterns, n={sched.n}, kind={sched.weight_kind}")
    click.echo(f"first accumulated weight {resp['first_weight']:g}, last {resp['last_weight']:g}")


@main.group()
def reshuffle():
    """Train offline reshuffling permutations."""


@reshuffle.command("train")
@click.option("--base", "base_path", type=click.Path(), required=True)
@click.option("--sigma", type=float, required=True)
@click.option("--samples", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--holdout-samples", type=click.IntRange(min=0), default=2000, show_default=True,
              help="Held-out sample count for the before/after excess-query report (0 skips).")
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def reshuffle_train(ctx, base_path, sigma, samples, seed, holdout_samples, out):
    """Sort a base schedule by Monte Carlo mean posterior and save the permutation."""
    _echo_config(
        {"base": base_path, "sigma": sigma, "samples": samples, "seed": seed,
         "holdout_samples": holdout_samples, "out": out}
    )
    base = _io(load_schedule, base_path)
    client = _client(ctx)
    resp = _post(
        client,
        "/reshuffle/train",
        {"base": _schedule_payload(base), "sigma": sigma, "samples": samples,
         "seed": seed, "holdout_samples": holdout_samples},
    )
    model = ReshuffleModel(
        base=base,
        pi_tilde=np.asarray(resp["pi_tilde"], dtype=np.int64) - 1,
        meta={"sigma_design": resp["sigma"], "mc_samples": resp["samples"], "seed": resp["seed"]},
    )
    _io(save_reshuffle_model, model, out, base_ref=os.path.basename(base_path))
    click.echo(f"wrote {out}: T1={base.length}, n={base.n}")
    if resp.get("delta_q_base") is not None:
        click.echo(
            f"held-out excess queries: base {resp['delta_q_base']:g} -> "
            f"reshuffled {resp['delta_q_reshuffled']:g}"
        )


@main.group()
def analyze():
    """Diagnostics on schedules/models."""


@analyze.command("rmatrix")
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Reshuffle model; analyzes the reshuffled schedule.")
@click.option("--base", "base_path", type=click.Path(), default=None,
              help="Base schedule for --model (defaults to the model's base reference).")
@click.option("--schedule", "schedule_path", type=click.Path(), default=None,
              help="Analyze a raw schedule instead of a model.")
@click.option("--k", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--sigma", type=float, default=None, help="Override the model's design sigma.")
@click.option("--samples", type=click.IntRange(min=1), default=None,
              help="Override the model's training sample count.")
@click.option("--seed", type=int, default=None, help="Override the model's training seed.")
@click.option("--out", "out_prefix", type=click.Path(), required=True)
@click.pass_context
def analyze_rmatrix(ctx, model_path, base_path, schedule_path, k, sigma, samples, seed, out_prefix):
    """Export the normalized pairwise-inversion matrix as PREFIX.csv + PREFIX.pgm."""
    if (model_path is None) == (schedule_path is None):
        raise click.UsageError("provide exactly one of --model or --schedule")
    if model_path is not None:
        meta, sched = _load_model_schedule(model_path, base_path)
        sigma = meta["sigma_design"] if sigma is None else sigma
        samples = meta["mc_samples"] if samples is None else samples
        seed = meta["seed"] if seed is None else seed
    else:
        sched = _io(load_schedule, schedule_path)
        if sigma is None or samples is None:
            raise click.UsageError("--schedule mode requires --sigma and --samples")
        seed = 0 if seed is None else seed
    _echo_config(
        {"model": model_path, "base": base_path, "schedule": schedule_path, "k": k,
         "sigma": sigma, "samples": samples, "seed": seed, "out": out_prefix}
    )
    client = _client(ctx)
    resp = _post(
        client,
        "/analysis/rmatrix",
        {"schedule": _schedule_payload(sched), "sigma": sigma, "samples": samples,
         "seed": seed, "k": k},
    )
    mat = RMatrix(raw=np.asarray(resp["raw"]), normalized=np.asarray(resp["normalized"]))
    _io(export_rmatrix, mat, f"{out_prefix}.csv", "csv")
    _io(export_rmatrix, mat, f"{out_prefix}.pgm", "pgm")
    click.echo(f"wrote {out_prefix}.csv and {out_prefix}.pgm ({mat.k}x{mat.k})")


def _load_model_schedule(model_path, base_path):
    """Resolve (meta, reshuffled schedule) from a model file plus its base schedule."""

    def load():
        with open(model_path) as fh:
            header = fh.readline().split()
        fields = dict(tok.split("=", 1) for tok in header[2:])
        ref = base_path or (
            None if fields.get("base", "-") == "-"
            else os.path.join(os.path.dirname(model_path) or ".", fields["base"])
        )
        if ref is None:
            raise click.UsageError("model file carries no base reference; pass --base")
        base = load_schedule(ref)
        model = load_reshuffle_model(model_path, base)
        return model.meta, model.reshuffled

    try:
        return _io(load)
    except InvalidParameterError as exc:
        raise click.UsageError(str(exc))


def _parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.UsageError(f"bad config line (want key=value): {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


_SIM_DEFAULTS = {
    "convention": "per_symbol",
    "T": "10000",
    "max_trials": "1000000",
    "min_block_errors": "100",
    "seed": "0",
    "workers": "1",
    "mode": "standard",
}


def _resolve_sim_options(config_path, overrides: dict) -> dict:
    cfg = dict(_SIM_DEFAULTS)
    if config_path is not None:
        cfg.update(_io(_parse_config_file, config_path))
    cfg.update({k: str(v) for k, v in overrides.items() if v is not None})
    return cfg


def _decoder_payload_from_cfg(cfg: dict, decoder: str) -> tuple[dict, list[str]]:
    """(decoder payload, input files) for one named decoder."""
    inputs: list[str] = []
    if decoder == "sgrand":
        return {"name": "sgrand", "kind": "sgrand", "schedule": None}, inputs
    model_key = f"model.{decoder}"
    sched_key = f"schedule.{decoder}"
    if model_key in cfg or decoder == "rs-orbgrand":
        model_path = cfg.get(model_key) or cfg.get("model")
        base_path = cfg.get(f"base.{decoder}") or cfg.get("base") or cfg.get("schedule.cdf-orbgrand")
        if not model_path or not base_path:
            raise click.UsageError(f"decoder {decoder} needs model=/base= (or {model_key}=, base.{decoder}=)")
        base = _io(load_schedule, base_path)
        model = _io(load_reshuffle_model, model_path, base)
        inputs += [model_path, base_path]
        sched = model.reshuffled
    else:
        sched_path = cfg.get(sched_key) or cfg.get("schedule")
        if not sched_path:
            raise click.UsageError(f"decoder {decoder} needs schedule= (or {sched_key}=)")
        inputs.append(sched_path)
        sched = _io(load_schedule, sched_path)
    return {"name": decoder, "kind": "static", "schedule": _schedule_payload(sched)}, inputs


def _sim_request(cfg: dict, decoder_payload: dict) -> dict:
    try:
        snrs = [float(s) for s in str(cfg["snr_db"]).replace(",", " ").split()]
    except (KeyError, ValueError):
        raise click.UsageError("config needs snr_db=<comma-separated dB list>")
    if "code" not in cfg:
        raise click.UsageError("config needs code=<spec>")
    return {
        "code": cfg["code"],
        "decoder": decoder_payload,
        "snr_db_list": snrs,
        "convention": cfg["convention"],
        "T": int(cfg["T"]),
        "max_trials": int(cfg["max_trials"]),
        "min_block_errors": int(cfg["min_block_errors"]),
        "seed": int(cfg["seed"]),
        "workers": int(cfg["workers"]),
        "mode": cfg["mode"],
    }


def _records_from_response(resp: dict) -> list[SimRecord]:
    return [SimRecord(**rec) for rec in resp["records"]]


@main.group()
def sim():
    """Monte Carlo benchmarks."""


@sim.command("bler")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--code", default=None)
@click.option("--decoder", default=None)
@click.option("--schedule", default=None)
@click.option("--model", default=None)
@click.option("--base", default=None)
@click.option("--snr-db", "snr_db", default=None, help="Comma-separated dB list.")
@click.option("--convention", type=click.Choice(["per_symbol", "ebn0"]), default=None)
@click.option("--t", "T", type=int, default=None, help="Query cap per decode.")
@click.option("--max-trials", type=int, default=None)
@click.option("--min-block-errors", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--mode", type=click.Choice(["standard", "ml_lower_bound"]), default=None)
@click.option("--out", default=None, help="Sweep CSV path (manifest written alongside).")
@click.pass_context
def sim_bler(ctx, config_path, **overrides):
    """Run a BLER / query-count sweep; emits CSV plus a JSON run manifest."""
    out = overrides.pop("out", None)
    cfg = _resolve_sim_options(config_path, overrides)
    out = out or cfg.get("out")
    if "decoder" not in cfg:
        raise click.UsageError("config needs decoder=<name>")
    decoder_payload, inputs = _decoder_payload_from_cfg(cfg, cfg["decoder"])
    req = _sim_request(cfg, decoder_payload)
    _echo_config({**{k: v for k, v in cfg.items()}, "out": out})
    client = _client(ctx)
    resp = _post(client, "/simulation/run", req)
    records = _records_from_response(resp)
    click.echo(SimRecord.CSV_HEADER)
    for rec in records:
        click.echo(rec.csv_row())
    if out:
        _io(write_records_csv, records, out)
        from .channel import SnrConvention
        from .simulate import SimConfig

        sim_config = SimConfig(
            code_spec=req["code"], decoder_name=cfg["decoder"],
            snr_db_list=tuple(req["snr_db_list"]),
            convention=SnrConvention(req["convention"]), T=req["T"],
            max_trials=req["max_trials"], min_block_errors=req["min_block_errors"],
            seed=req["seed"], workers=req["workers"], mode=req["mode"],
        )
        _io(write_manifest, out + ".manifest.json", sim_config, inputs, out)
        click.echo(f"wrote {out} and {out}.manifest.json")


@sim.command("table")
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--out", default=None, help="Grid CSV path.")
@click.pass_context
def sim_table(ctx, config_path, out):
    """Average-query grid over the standard decoder rows and the configured SNRs."""
    cfg = _resolve_sim_options(config_path, {})
    out = out or cfg.get("out")
    _echo_config({**cfg, "out": out})
    client = _client(ctx)
    columns = None
    rows = []
    input_files: list[str] = []
    for decoder in TABLE_DECODERS:
        payload, inputs = _decoder_payload_from_cfg(cfg, decoder)
        input_files += inputs
        req = _sim_request(cfg, payload)
        resp = _post(client, "/simulation/run", req)
        records = _records_from_response(resp)
        if columns is None:
            columns = [rec.snr_db for rec in records]
        rows.append((decoder, [rec.avg_queries for rec in records]))
    header = "decoder," + ",".join(f"{c:g}dB" for c in columns)
    click.echo(header)
    lines = [header]
    for name, vals in rows:
        line = name + "," + ",".join(f"{v:.4g}" for v in vals)
        click.echo(line)
        lines.append(line)
    if out:
        def _write():
            with open(out, "w") as fh:
                fh.write("\n".join(lines) + "\n")

        _io(_write)
        click.echo(f"wrote {out}")


@main.group()
def oracle():
    """Brute-force verification suites."""


@oracle.command("verify")
@click.option("--quick", is_flag=True, default=False)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def oracle_verify(ctx, quick, seed):
    """Run the oracle property suite; exit 4 if any property fails."""
    _echo_config({"quick": quick, "seed": seed})
    client = _client(ctx)
    resp = _post(client, "/oracle/verify", {"quick": quick, "seed": seed})
    failed = []
    for prop in resp["properties"]:
        status = "PASS" if prop["passed"] else "FAIL"
        click.echo(f"{status} {prop['name']}: {prop['detail']}")
        if not prop["passed"]:
            failed.append(prop["name"])
    if failed:
        click.echo(f"verification failed: {', '.join(failed)}", err=True)
        sys.exit(4)
    click.echo("all oracle properties passed")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
