"""End-to-end checks against the consuming toolkit, one printed line each."""

import os

import semcom
from semcom.harness import run_pipeline
from semcom.metrics import ScoreTable
from semcom_exporter import CAPTIONS, ExportJob, run_job


def _report(name, ok, detail):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def _export_corpus(tmp_path, budgets=()):
    job = ExportJob(prompts=list(CAPTIONS), out_dir=str(tmp_path / "corpus"),
                    budgets=list(budgets), seed=0)
    return job, run_job(job)


def test_format_round_trip(tmp_path):
    job, bundle_dirs = _export_corpus(tmp_path, budgets=range(0, 2001, 250))
    errors = []
    for path in bundle_dirs:
        try:
            semcom.load_bundle(path)
        except semcom.BundleError as exc:
            errors.append(f"{os.path.basename(path)}: {exc}")
    try:
        ScoreTable.from_csv(os.path.join(job.out_dir, "scores.csv"))
    except Exception as exc:  # noqa: BLE001
        errors.append(f"scores.csv: {exc}")
    _report("format-round-trip", not errors,
            f"{len(bundle_dirs)} bundles + 1 table, {len(errors)} errors"
            + ("; " + "; ".join(errors) if errors else ""))


def test_corpus_sanity(tmp_path):
    job, bundle_dirs = _export_corpus(tmp_path, budgets=range(0, 2001, 250))
    assert len(bundle_dirs) >= 20

    ratios = []
    for path in bundle_dirs:
        bundle = semcom.load_bundle(path)
        result = run_pipeline(bundle)  # xi = 0.9 / 0.8 / 0.5 by tag
        ratios.append(semcom.reduction_ratio(result.info,
                                             (bundle.image_width, bundle.image_height)))
    in_band = all(0.20 <= r <= 0.75 for r in ratios)

    table = ScoreTable.from_csv(os.path.join(job.out_dir, "scores.csv"))
    worst_rise = 0.0
    for rows in table.rows.values():
        ds = [d for _, d, _ in sorted(rows)]
        for prev, cur in zip(ds, ds[1:]):
            worst_rise = max(worst_rise, cur - prev)

    _report("real-corpus-sanity",
            in_band and worst_rise <= 0.05,
            f"{len(ratios)} bundles, ratio range [{min(ratios):.3f}, {max(ratios):.3f}], "
            f"max D rise {worst_rise:.4f}")
