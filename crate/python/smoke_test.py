"""Smoke test for the `junta` extension module.

Build first:  cargo build --release -p junta-py --features extension-module
Then run:     python3 python/smoke_test.py
"""

import glob
import importlib.util
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_module():
    candidates = sorted(
        glob.glob(os.path.join(ROOT, "target", "*", "libjunta.so"))
        + glob.glob(os.path.join(ROOT, "target", "*", "libjunta.dylib")),
        key=os.path.getmtime,
    )
    if not candidates:
        sys.exit("libjunta not found; build it with cargo build -p junta-py --features extension-module")
    tmp = tempfile.mkdtemp()
    path = os.path.join(tmp, "junta.so")
    shutil.copy(candidates[-1], path)
    spec = importlib.util.spec_from_file_location("junta", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    junta = load_module()

    parity = junta.Distribution.parity(8, [1, 2, 3], 0.125)
    assert abs(sum(parity.pmf()) - 1.0) < 1e-12
    assert parity.relevant_variables() == [1, 2, 3]
    again = junta.Distribution.from_json(parity.to_json())
    assert again.tv(parity) == 0.0

    cfg = junta.Config.from_json('{"budgetConstantScale": 0.05}')
    found, queries, budget = junta.find_variables(parity, 3, 0.125, cfg, seed=7)
    assert budget <= 24 and queries > 0
    print("finder", found, queries, budget)

    hidden = junta.Distribution.junta(6, [2, 5], [0.4, 0.1, 0.2, 0.3])
    learned = junta.learn_junta(hidden, [2, 5], 0.1, seed=1)
    assert learned.tv(hidden) <= 0.1
    print("learner tv", learned.tv(hidden))

    d, vars_ = junta.distance_to_k_junta(parity, 2)
    assert d >= 0.25 - 1e-12
    assert junta.closest_junta_distance(parity, [1, 2, 3]) < 1e-12
    print("distance to 2-juntas", d, vars_)

    bound, tv = junta.product_tv_lower_bound(junta.Distribution.product([0.55] * 16))
    assert tv >= bound
    print("product tv", bound, tv)

    tester_cfg = junta.Config.from_json(
        '{"budgetConstantScale": 0.05, "testerScale": 0.01, "cExponent": 1, "eps0LogPower": 0, "meanTesterC": 200}'
    )
    accepted, found, queries = junta.test_junta(junta.Distribution.junta(8, [1, 2], [0.4, 0.1, 0.2, 0.3]), 2, 0.125, tester_cfg)
    print("tester", accepted, found, queries)

    is_junta, z = junta.mean_test(junta.Distribution.uniform(64), 4, 0.5, junta.Config.from_json('{"meanTesterC": 50}'))
    assert is_junta
    print("mean test", is_junta, z)

    dno = junta.gadget_instance(256, 0.05, False, seed=3)
    assert dno.n == 256
    audit = junta.compression_audit(junta.Distribution.uniform(2), 2, 0.05, 0.25, trials=1000)
    assert audit["tv"] <= 0.25
    print("compression", audit)

    report = junta.structural_audit(junta.Distribution.parity(4, [1, 2], 0.1), [1], 3.0)
    assert report["rhsSum"] > 0
    print("structural", report)
    print("ok")


if __name__ == "__main__":
    main()
