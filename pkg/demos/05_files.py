"""Reading datasets and writing traces and reference solutions."""

import tempfile
from pathlib import Path

import numpy as np

from accrestart import FunctionValueAdaptive, SparseDesign, compute_reference, lasso_problem, run
from accrestart.data_io import (DatasetManifest, load_design, read_reference, read_trace, synth_lasso,
                                write_libsvm, write_reference, write_trace)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    # files carry +1/-1 labels, so threshold the synthetic targets
    design, _ = synth_lasso(n=30, m=50, density=0.2, seed=0)
    design = SparseDesign(design.A, np.where(design.b > 0, 1.0, -1.0))
    write_libsvm(design, tmp / "toy.svm")
    print((tmp / "toy.svm").read_text().splitlines()[0])

    design = load_design(DatasetManifest(tmp / "toy.svm", feature_count=30))
    prob = lasso_problem(design)
    x_star, F_star = compute_reference(prob)
    write_reference(tmp / "toy.ref", x_star, F_star, {"dataset": "toy.svm"})
    prob = prob.with_reference(*read_reference(tmp / "toy.ref", n=30))

    tr = run(prob, "fista", FunctionValueAdaptive(), budget=200, record_every=50)
    write_trace(tr, tmp / "trace.csv")
    print((tmp / "trace.csv").read_text())
    print("round trip keeps", len(read_trace(tmp / "trace.csv")), "rows")

    # malformed input is reported with its line number
    (tmp / "bad.svm").write_text("1 1:0.5 2:1\n-1 3:x\n")
    try:
        load_design(tmp / "bad.svm")
    except ValueError as err:
        print("error:", err)
