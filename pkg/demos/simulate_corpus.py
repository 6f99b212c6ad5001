"""Export a tiny caption corpus with semcom-export, then simulate the
downlink with the semcom CLI: two packages joined only by files on disk.

Run: python3 demos/simulate_corpus.py  (needs the semcom-exporter package)
"""

import json
import os
import sys
import tempfile


def main():
    try:
        from semcom_exporter.cli import main as export_main
    except ImportError:
        print("semcom-exporter is not installed; "
              "pip install -e exporter/ --no-build-isolation")
        return 1
    from semcom.cli import main as semcom_main

    work = tempfile.mkdtemp(prefix="semcom_demo_")
    prompts = os.path.join(work, "prompts.txt")
    with open(prompts, "w") as fh:
        fh.write("A blue car driving through the city.\n"
                 "Two dogs running across a snowy field.\n")

    out = os.path.join(work, "bundles")
    code = export_main(["export", "--prompts", prompts, "--out", out, "--seed", "3"])
    if code != 0:
        return code
    print(f"exported bundles under {out}\n")

    scenario = {
        "seed": 11,
        "corpus": [os.path.join(out, "bundle_000"), os.path.join(out, "bundle_001")],
        "users": [
            {"bundle": 0, "distance_m": 12.0, "latency_s": 5.0},
            {"bundle": 1, "distance_m": 40.0, "latency_s": 5.0},
            {"bundle": 1, "distance_m": 150.0, "latency_s": 5.0},
        ],
        "channel": {"W_hz": 1000.0, "P_w": 1.0, "N0_w_per_hz": 1e-6},
        "jpsq": {"t_max": 0.6},
    }
    scenario_path = os.path.join(work, "scenario.json")
    with open(scenario_path, "w") as fh:
        json.dump(scenario, fh, indent=1)

    report = os.path.join(work, "report.csv")
    code = semcom_main(["simulate", scenario_path, "--out", report])
    if code != 0:
        return code
    print(f"per-user results ({report}):")
    with open(report) as fh:
        print(fh.read())
    return 0


if __name__ == "__main__":
    sys.exit(main())
