"""Smoke test for the kmeans_landscape_py extension module."""

import json

import kmeans_landscape_py as kl


def main():
    model = kl.MixtureModel("ball", [[-2.0], [0.0], [2.0]], 0.3)
    pop = kl.Population(model, "analytic1d")

    truth = kl.Solution(model.centers)
    spurious = model.spurious_configuration()
    g_truth, _ = pop.objective(truth)
    g_spur, _ = pop.objective(spurious)
    print(f"G(truth) = {g_truth:.6f}  G(spurious) = {g_spur:.6f}")
    assert g_truth < g_spur

    report = json.loads(pop.classify(spurious))
    print("blocks:", [(b["kind"], b["fitted"], b["true"]) for b in report["blocks"]])

    log = json.loads(pop.lloyd(spurious))
    print(f"lloyd from spurious point: converged={log['converged']} iterations={log['iterations']}")
    assert log["converged"]

    square = kl.MixtureModel("gaussian", [[0, 0], [10, 0], [10, 10], [0, 10]], 1.0)
    mc = kl.Population(square, "monte_carlo", n=20_000, seed=1)
    survey = json.loads(mc.survey(json.dumps({"restarts": 20, "seed": 7})))
    print("survey histogram:", survey["histogram"])
    assert survey["invalid_partitions"] == 0

    cert = json.loads(kl.verify_spurious_1d(0.3))
    print(f"certificate {cert['name']}: {cert['status']}")
    assert cert["status"] == "passed"
    print("ok")


if __name__ == "__main__":
    main()
