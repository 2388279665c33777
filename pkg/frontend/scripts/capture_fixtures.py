#!/usr/bin/env python3
"""Capture golden service payloads for the dashboard test suite.

Starts the harmrank service in-process, walks the endpoints the dashboard
uses, and writes each response verbatim to tests/fixtures/. Rerun after any
service payload change:

    python3 scripts/capture_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from harmrank.ingest import Schema, benchmark_annotations_path
from harmrank.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SMALL_BODY = {
    "annotations": [
        {"category": "alpha", "unit": "low", "weight": 6},
        {"category": "alpha", "unit": "high", "weight": 4},
        {"category": "beta", "unit": "low", "weight": 1},
        {"category": "beta", "unit": "high", "weight": 9},
    ],
    "severity_order": ["low", "high"],
}


def save(name: str, payload: object) -> None:
    path = FIXTURES / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path.name}")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    app = create_app(
        capacity=64,
        workers=2,
        preload={
            "input_path": benchmark_annotations_path(),
            "schema": Schema.AGGREGATED_TRIPLETS.value,
        },
    )
    with TestClient(app) as client:
        save("snapshots_list", client.get("/snapshots").json())

        baseline = client.get("/snapshots/snap-000001/metrics").json()
        save("metrics_benchmark", baseline)
        units = baseline["units"]

        save(
            "reorder_identity",
            client.post(
                "/snapshots/snap-000001/reorder", json={"ordering": units}
            ).json(),
        )

        swapped = list(units)
        swapped[3], swapped[4] = swapped[4], swapped[3]
        save(
            "reorder_adjacent_swap",
            client.post(
                "/snapshots/snap-000001/reorder", json={"ordering": swapped}
            ).json(),
        )

        save(
            "reorder_reversal",
            client.post(
                "/snapshots/snap-000001/reorder",
                json={"ordering": list(reversed(units))},
            ).json(),
        )

        save(
            "scenario_boundary",
            client.post(
                "/snapshots/snap-000001/scenario", json={"kind": "boundary"}
            ).json(),
        )
        save(
            "scenario_permutation_k1",
            client.post(
                "/snapshots/snap-000001/scenario",
                json={"kind": "permutation", "k_swaps": 1, "trials": 20, "base_seed": 0},
            ).json(),
        )
        save(
            "scenario_removal_f0",
            client.post(
                "/snapshots/snap-000001/scenario",
                json={"kind": "removal", "removal_fraction": 0.0, "trials": 5, "base_seed": 0},
            ).json(),
        )
        save(
            "scenario_removal_f01",
            client.post(
                "/snapshots/snap-000001/scenario",
                json={"kind": "removal", "removal_fraction": 0.1, "trials": 5, "base_seed": 0},
            ).json(),
        )

        pending = client.post(
            "/snapshots/snap-000001/scenario",
            json={"kind": "boundary", "wait": False},
        )
        save("scenario_pending", pending.json())
        job = pending.json()["job"]
        while True:
            polled = client.get(
                f"/snapshots/snap-000001/scenario", params={"job": job}
            ).json()
            if polled.get("status") == "done":
                save("scenario_polled_done", polled)
                break

        top = baseline["categories"][0]["category"]
        save(
            "lorenz_top",
            client.get(f"/snapshots/snap-000001/lorenz/{top}").json(),
        )

        bad = list(units)
        bad[0] = "no-such-unit"
        save(
            "error_invalid_ordering",
            client.post(
                "/snapshots/snap-000001/reorder", json={"ordering": bad}
            ).json(),
        )
        save(
            "error_snapshot_not_found",
            client.get("/snapshots/snap-999999/metrics").json(),
        )
        save(
            "error_category_not_found",
            client.get("/snapshots/snap-000001/lorenz/NoSuchCategory").json(),
        )

        small = client.post("/snapshots", json=SMALL_BODY).json()
        save("metrics_small", small)
        save(
            "reorder_small_swap",
            client.post(
                f"/snapshots/{small['id']}/reorder",
                json={"ordering": ["high", "low"]},
            ).json(),
        )


if __name__ == "__main__":
    main()
