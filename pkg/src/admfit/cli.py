"""Command-line surface.

Subcommands tie the library into fit / compare / predict workflows around
flat files:

    admfit pi-groups   derive dimensionless groups from a quantity CSV
    admfit simulate    generate a synthetic ramp-test dataset
    admfit fit         run the parallel-tempering fit, write a run dir
    admfit evidence    thermodynamic-integration evidence of a run dir
    admfit compare     Bayes factor between two run dirs
    admfit predict     posterior-predictive draws at a loading rate
    admfit replicate   replicate datasets (and optionally an ECDF band)
    admfit check       analytic-vs-oracle cross validation report

Every command exits 0 on success; on failure it prints one JSON error
line to stderr and exits nonzero.  ``fit`` writes a manifest sufficient
to reproduce the run bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .errors import AdmfitError

MODEL_CHOICES = ("us", "canadian", "canadian2")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "handler"):
        parser.print_help()
        return 2
    try:
        args.handler(args)
    except AdmfitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(
            json.dumps({"error": "ParseError", "message": f"line {exc.lineno}: {exc.msg}"}),
            file=sys.stderr,
        )
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="admfit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("pi-groups", help="derive dimensionless groups")
    p.add_argument("--quantities", help="quantity CSV (symbol,name,<base dims>)")
    p.add_argument("--preset", choices=("table1",), help="built-in quantity registry")
    p.add_argument("--repeating", help="comma-separated repeating symbols (with --quantities)")
    p.add_argument("--predictand", help="predictand symbol (default: first quantity)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(handler=_cmd_pi_groups)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--params", required=True, help="JSON file of population parameters")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--mu-s", type=float, default=31.0, help="reference mean failure time, s")
    p.add_argument("--k", type=float, help="constant loading rate, psi/s")
    p.add_argument("--k-log-mean", type=float, default=None, help="log-normal rate log-mean")
    p.add_argument("--k-log-sd", type=float, default=0.3, help="log-normal rate log-sd")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("fit", help="parallel-tempering fit")
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--config", help="JSON config file (defaults apply when omitted)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("evidence", help="evidence of a finished run")
    p.add_argument("--run", required=True, help="run directory from fit")
    p.set_defaults(handler=_cmd_evidence)

    p = sub.add_parser("compare", help="Bayes factor between two runs")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("predict", help="posterior-predictive draws")
    p.add_argument("--run", required=True)
    p.add_argument("--k", required=True, type=float, help="loading rate, psi/s")
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("replicate", help="replicate datasets from a run")
    p.add_argument("--run", required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--band-out", help="also write an ECDF band CSV here")
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--central", type=float, default=None, help="central band width, e.g. 0.9")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_replicate)

    p = sub.add_parser("check", help="analytic-vs-oracle cross validation")
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=None, help="max relative disagreement")
    p.set_defaults(handler=_cmd_check)
    return parser


def _cmd_pi_groups(args) -> None:
    from . import dimensions as dims
    from .errors import ValidationError

    if args.preset == "table1":
        system = dims.table1_system()
        labels = dims.TABLE1_PI_LABELS
    elif args.quantities:
        repeating = [s.strip() for s in (args.repeating or "").split(",") if s.strip()]
        system = dims.load_quantity_system(
            args.quantities, repeating=repeating, predictand=args.predictand
        )
        labels = None
    else:
        raise ValidationError("pi-groups needs --preset or --quantities")
    diagnostic = dims.validate_repeating(system)
    if diagnostic is not None:
        raise ValidationError(diagnostic)
    text = dims.pi_system_csv(dims.derive_pi_system(system, labels))
    if args.out:
        from . import dataio

        Path(args.out).write_text(text)
        inputs = {"preset": args.preset, "predictand": args.predictand}
        if args.quantities:
            inputs["quantities_digest"] = dataio.file_digest(args.quantities)
            inputs["repeating"] = args.repeating
        dataio.write_command_manifest(args.out, "pi-groups", inputs)
    else:
        sys.stdout.write(text)


def _load_params(model: str, path):
    from . import likelihood as lk
    from .errors import ConfigError

    with open(path) as fh:
        raw = json.load(fh)
    names = lk.param_names(model)
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ConfigError(f"unknown parameter keys for {model}: {', '.join(unknown)}")
    missing = sorted(set(names) - set(raw))
    if missing:
        raise ConfigError(f"missing parameter keys for {model}: {', '.join(missing)}")
    return lk.make_params(model, [raw[n] for n in names])


def _cmd_simulate(args) -> None:
    import math

    from . import dataio
    from .errors import ValidationError

    params = _load_params(args.model, args.params)
    if args.k is not None and args.k_log_mean is not None:
        raise ValidationError("give either --k or --k-log-mean, not both")
    if args.k is not None:
        k_spec = args.k
    else:
        log_mean = args.k_log_mean if args.k_log_mean is not None else math.log(205.0)
        k_spec = dataio.LogNormalRates(log_mean=log_mean, log_sd=args.k_log_sd)
    dataset = dataio.simulate_dataset(
        args.model, params, args.n, k_spec, mu_s=args.mu_s, seed=args.seed
    )
    dataio.write_dataset(dataset, args.out)
    dataio.write_command_manifest(
        args.out,
        "simulate",
        {
            "model": args.model,
            "params_digest": dataio.file_digest(args.params),
            "n": args.n,
            "seed": args.seed,
            "mu_s": args.mu_s,
            "k": args.k,
            "k_log_mean": args.k_log_mean,
            "k_log_sd": args.k_log_sd,
        },
    )
    print(json.dumps({"written": args.out, "n": len(dataset), "mu_s": dataset.mu_s}))


def _run_paths(run_dir):
    run = Path(run_dir)
    return {
        "manifest": run / "manifest.json",
        "summary": run / "summary.json",
        "samples": lambda i: run / f"samples_rung_{i:02d}.csv",
        "loglik": lambda i: run / f"loglik_rung_{i:02d}.csv",
    }


def _cmd_fit(args) -> None:
    from . import __version__, dataio
    from . import sampler as sp

    config = dataio.load_config(args.config) if args.config else dataio.default_config()
    config["model"] = args.model
    dataset = dataio.load_dataset(args.data, mu_s=config["data"]["mu_s"])
    cfg = dataio.sampler_config_from(config)

    started = time.time()
    samples = sp.run_parallel_tempering(args.model, dataset, cfg)
    wall = time.time() - started
    evidence = sp.estimate_log_marginal(samples)
    summary = sp.summarize_posterior(samples)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = _run_paths(out)
    for i in range(len(samples.temperatures)):
        with open(paths["samples"](i), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(samples.parameter_names)
            for row in samples.samples[i]:
                writer.writerow([repr(float(v)) for v in row])
        with open(paths["loglik"](i), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["log_likelihood"])
            for v in samples.log_likelihoods[i]:
                writer.writerow([repr(float(v))])

    with open(paths["summary"], "w") as fh:
        json.dump(
            {
                "model": args.model,
                "temperatures": list(samples.temperatures),
                "log_marginal": evidence.log_marginal,
                "log_marginal_se": evidence.standard_error,
                "rung_mean_log_likelihoods": [float(v) for v in evidence.rung_means],
                "acceptance_rates": [float(v) for v in samples.acceptance_rates],
                "swap_rates": [float(v) for v in samples.swap_rates],
                "posterior_quantiles": summary.as_dict(),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

    manifest = dataio.RunManifest(
        model=args.model,
        seed=cfg.seed,
        config_digest=dataio.json_digest(config),
        dataset_digest=dataio.file_digest(args.data),
        dataset_path=str(Path(args.data).resolve()),
        artifact_version=__version__,
        iterations=cfg.iterations,
        rungs=len(samples.temperatures),
        wall_clock_seconds=wall,
        config=config,
    )
    manifest.write(paths["manifest"])
    print(
        json.dumps(
            {
                "run_dir": str(out),
                "log_marginal": evidence.log_marginal,
                "wall_clock_seconds": wall,
            }
        )
    )


def _load_run(run_dir):
    import numpy as np

    from . import dataio

    paths = _run_paths(run_dir)
    manifest = dataio.RunManifest.read(paths["manifest"])
    rungs = manifest.rungs
    logliks = []
    for i in range(rungs):
        with open(paths["loglik"](i)) as fh:
            reader = csv.reader(fh)
            next(reader)
            logliks.append([float(row[0]) for row in reader])
    ladder = _ladder_from_config(manifest)
    return manifest, np.asarray(logliks), ladder


def _ladder_from_config(manifest):
    from .sampler import TemperatureLadder

    s = manifest.config["sampler"]
    return TemperatureLadder.power_schedule(int(s["rungs"]), float(s["ladder_exponent"]))


def _evidence_of(run_dir):
    import numpy as np

    from . import sampler as sp

    manifest, logliks, ladder = _load_run(run_dir)
    means = logliks.mean(axis=1)
    est = sp.estimate_log_marginal(
        sp.PosteriorSamples(
            parameter_names=(),
            temperatures=tuple(ladder),
            samples=np.empty((len(ladder), logliks.shape[1], 0)),
            log_likelihoods=logliks,
            acceptance_rates=np.zeros(len(ladder)),
            swap_rates=np.zeros(max(len(ladder) - 1, 1)),
            proposal_multipliers=np.zeros(len(ladder)),
        )
    )
    return manifest, est


def _cmd_evidence(args) -> None:
    manifest, est = _evidence_of(args.run)
    print(
        json.dumps(
            {
                "model": manifest.model,
                "log_marginal": est.log_marginal,
                "standard_error": est.standard_error,
                "rung_means": [float(v) for v in est.rung_means],
            }
        )
    )


def _cmd_compare(args) -> None:
    from . import sampler as sp

    manifest_a, est_a = _evidence_of(args.run_a)
    manifest_b, est_b = _evidence_of(args.run_b)
    b = sp.bayes_factor(est_a, est_b)
    print(
        json.dumps(
            {
                "model_a": manifest_a.model,
                "model_b": manifest_b.model,
                "log_marginal_a": est_a.log_marginal,
                "log_marginal_b": est_b.log_marginal,
                "log_bayes_factor": b.log_value,
                "bayes_factor": b.value,
            }
        )
    )


def _posterior_rows(run_dir):
    import numpy as np

    from . import dataio

    paths = _run_paths(run_dir)
    manifest = dataio.RunManifest.read(paths["manifest"])
    top = paths["samples"](manifest.rungs - 1)
    with open(top) as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = np.asarray([[float(v) for v in row] for row in reader])
    return manifest, names, rows


def _cmd_predict(args) -> None:
    from . import predictive
    from .streams import StreamKey

    manifest, names, rows = _posterior_rows(args.run)
    mu_s = _dataset_of(manifest).mu_s
    samples, summary = predictive.predict_failure(
        rows, manifest.model, args.k, mu_s, args.draws, StreamKey(args.seed)
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta_index", "failure_time_s", "load_at_failure_psi"])
        for s in samples:
            writer.writerow([s.theta_index, repr(s.failure_time), repr(s.load_at_failure)])
    from . import dataio

    dataio.write_command_manifest(
        args.out,
        "predict",
        {
            "run_config_digest": manifest.config_digest,
            "run_dataset_digest": manifest.dataset_digest,
            "model": manifest.model,
            "k": args.k,
            "draws": args.draws,
            "seed": args.seed,
        },
    )
    print(
        json.dumps(
            {
                "written": args.out,
                "k": args.k,
                "n_draws": summary.n_draws,
                "n_nonfailing": summary.n_nonfailing,
                "mean_failure_time_s": summary.mean_failure_time,
                "mean_load_psi": summary.mean_load,
            }
        )
    )


def _dataset_of(manifest):
    from . import dataio
    from .errors import ValidationError

    path = Path(manifest.dataset_path)
    if not path.exists():
        raise ValidationError(f"dataset behind this run is missing: {path}")
    digest = dataio.file_digest(path)
    if digest != manifest.dataset_digest:
        raise ValidationError(f"dataset at {path} changed since the run (digest mismatch)")
    return dataio.load_dataset(path, mu_s=manifest.config["data"]["mu_s"])


def _cmd_replicate(args) -> None:
    import numpy as np

    from . import predictive
    from .streams import StreamKey

    manifest, names, rows = _posterior_rows(args.run)
    observed = _dataset_of(manifest)
    replicates, resampled = predictive.replicate_datasets(
        rows, manifest.model, observed, args.reps, StreamKey(args.seed)
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", "specimen_id", "failure_time_s", "loading_rate_psi_per_s"])
        for r, ds in enumerate(replicates, start=1):
            for i, (t, k) in enumerate(zip(ds.failure_times, ds.loading_rates), start=1):
                writer.writerow([r, i, repr(float(t)), repr(float(k))])
    from . import dataio

    dataio.write_command_manifest(
        args.out,
        "replicate",
        {
            "run_config_digest": manifest.config_digest,
            "run_dataset_digest": manifest.dataset_digest,
            "model": manifest.model,
            "reps": args.reps,
            "seed": args.seed,
        },
    )
    payload = {"written": args.out, "reps": args.reps, "resampled_nonfailing": resampled}
    if args.band_out:
        pooled = np.concatenate([observed.failure_times] + [d.failure_times for d in replicates])
        grid = np.linspace(pooled.min() * 0.95, pooled.max() * 1.05, args.grid_points)
        band = predictive.ecdf_band(replicates, observed, grid, central=args.central)
        with open(args.band_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "observed", "lower", "upper"])
            for row in zip(band.grid, band.observed, band.lower, band.upper):
                writer.writerow([repr(float(v)) for v in row])
        payload["band"] = args.band_out
    print(json.dumps(payload))


def _cmd_check(args) -> None:
    import math

    import numpy as np

    from . import damage as dm
    from . import ode
    from .streams import StreamKey

    rng = StreamKey(args.seed).child("check").generator()
    mu_s = 31.0
    tolerance = args.tolerance if args.tolerance is not None else (
        1e-6 if args.model == "us" else 1e-4
    )
    worst = 0.0
    compared = 0
    skipped = 0
    for i in range(args.draws):
        if args.model == "us":
            effects = dm.USEffects(
                A=float(np.exp(rng.normal(-0.5, 0.3))), B=float(np.exp(rng.normal(0.5, 0.4)))
            )
            k = float(rng.lognormal(math.log(205.0), 0.3))
            closed = dm.us_failure_time(effects, mu_s).time
            _, oracle = ode.integrate_damage(
                "us", effects, dm.LoadProfile.ramp(k), mu_s, tol=1e-10
            )
        else:
            scale = 0.004 if args.model == "canadian" else 1.0
            effects = dm.CanadianEffects(
                a=float(abs(rng.normal(scale, scale / 3)) + scale / 10),
                b=float(np.exp(rng.normal(0.5, 0.3))),
                c=float(abs(rng.normal(scale, scale / 3)) + scale / 10),
                n=float(np.exp(rng.normal(0.3, 0.3))),
                sigma0=float(1.0 / (1.0 + math.exp(-rng.normal(0.0, 0.7)))),
            )
            k = float(rng.lognormal(math.log(205.0), 0.3))
            ctx = dm.RampContext(k=k, mu_ref=mu_s)
            solver = dm.canadian_failure_time if args.model == "canadian" else dm.canadian2_failure_time
            closed = solver(effects, ctx).time
            _, oracle = ode.integrate_damage(
                args.model, effects, dm.LoadProfile.ramp(k), mu_s, tol=1e-9
            )
        if closed is None or oracle.time is None:
            skipped += 1
            continue
        compared += 1
        worst = max(worst, abs(closed - oracle.time) / closed)
    report = {
        "model": args.model,
        "draws": args.draws,
        "compared": compared,
        "skipped_nonfailing": skipped,
        "max_relative_disagreement": worst,
        "tolerance": tolerance,
        "pass": bool(worst < tolerance and compared > 0),
    }
    print(json.dumps(report))
    if not report["pass"]:
        from .errors import ValidationError

        raise ValidationError(
            f"analytic and oracle solvers disagree: {worst:.3e} >= {tolerance:.1e}"
        )


if __name__ == "__main__":
    sys.exit(main())
