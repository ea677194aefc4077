use std::ffi::CString;

use kmeans_landscape_py::register;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "kmeans_landscape_py").unwrap();
        register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("kl", m).unwrap();
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn model_and_objective() {
    run(r#"
import json
m = kl.MixtureModel("ball", [[-2.0], [0.0], [2.0]], 0.3)
assert (m.k, m.dim, m.kind) == (3, 1, "ball")
pop = kl.Population(m, "analytic1d")
truth = kl.Solution(m.centers)
g, se = pop.objective(truth)
assert se == 0.0 and abs(g - 0.03) < 1e-12, g
spur = m.spurious_configuration()
report = json.loads(pop.classify(spur))
kinds = sorted(b["kind"] for b in report["blocks"])
assert kinds == ["ManyFitOne", "OneFitMany"], kinds
"#);
}

#[test]
fn lloyd_and_sampling() {
    run(r#"
import json
m = kl.MixtureModel("ball", [[-2.0], [0.0], [2.0]], 0.3)
labels, pts = m.sample(300, 5)
assert len(pts) == 300 and len(labels) == 300
assert labels == m.sample(300, 5)[0]
log = json.loads(kl.lloyd_empirical(pts, kl.Solution([[-2.1], [0.1], [1.9]])))
assert log["converged"]
assert abs(log["objective"][-1] - kl.empirical_objective_of(pts, kl.Solution(log["iterates"][-1]))) < 1e-9
pop = kl.Population(m, "analytic1d")
log = json.loads(pop.lloyd(m.spurious_configuration()))
assert log["converged"] and log["iterations"] <= 1
"#);
}

#[test]
fn certificates_and_errors() {
    run(r#"
import json
c = json.loads(kl.verify_spurious_1d(0.3))
assert c["status"] == "passed", c
c = json.loads(kl.verify_asymmetric_1d(0.2))
assert c["name"]
try:
    kl.MixtureModel("ball", [[0.0], [0.1]], 0.3)
    raise AssertionError("overlap accepted")
except ValueError:
    pass
try:
    kl.Population(kl.MixtureModel("gaussian", [[0.0, 0.0], [5.0, 0.0]], 1.0))
    raise AssertionError("missing seed accepted")
except ValueError as e:
    assert "seed" in str(e)
"#);
}
