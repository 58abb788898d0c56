#!/usr/bin/env python3
"""Regenerate data/titanic.csv and data/boston.csv.

Titanic: the titanic3 table (1309 passengers) shipped inside the vaex-core
wheel as vaex/datasets/titanic.hdf5. Rows with a missing age or fare are
dropped, leaving 1045 complete records in the original row order.

Boston: MASS::Boston (506 tracts, 13 predictors + medv) as bundled in the
pydataset sdist under resources/rdata/csv/MASS/Boston.csv.

Usage:
    pip download --no-deps -d /tmp/wheels vaex-core pydataset
    python3 tools/prepare_datasets.py /tmp/wheels data/
"""
import csv
import glob
import io
import os
import sys
import tarfile
import tempfile
import zipfile

import h5py
import numpy as np


def titanic_rows(wheel_path):
    with zipfile.ZipFile(wheel_path) as zf, tempfile.TemporaryDirectory() as tmp:
        zf.extract("vaex/datasets/titanic.hdf5", tmp)
        cols = h5py.File(os.path.join(tmp, "vaex/datasets/titanic.hdf5"))["table/columns"]

        def strings(name):
            raw = cols[name]["data"][:].tobytes()
            idx = cols[name]["indices"][:]
            return [raw[idx[i]:idx[i + 1]].decode() for i in range(len(idx) - 1)]

        age = cols["age/data"][:]
        fare = cols["fare/data"][:]
        sex = strings("sex")
        pclass = cols["pclass/data"][:]
        sibsp = cols["sibsp/data"][:]
        parch = cols["parch/data"][:]
        survived = cols["survived/data"][:]
        for i in range(len(age)):
            if np.isnan(age[i]) or np.isnan(fare[i]):
                continue
            yield [int(pclass[i]), sex[i], repr(float(age[i])), int(sibsp[i]),
                   int(parch[i]), repr(float(fare[i])), int(survived[i])]


def boston_rows(sdist_path):
    with tarfile.open(sdist_path) as outer:
        member = next(m for m in outer.getmembers() if m.name.endswith("resources.tar.gz"))
        inner = tarfile.open(fileobj=io.BytesIO(outer.extractfile(member).read()))
        data = inner.extractfile("resources/rdata/csv/MASS/Boston.csv").read().decode()
    reader = csv.reader(io.StringIO(data))
    header = next(reader)[1:]
    yield header
    for row in reader:
        yield row[1:]


def main():
    wheels, out = sys.argv[1], sys.argv[2]
    vaex = glob.glob(os.path.join(wheels, "vaex_core-*.whl"))[0]
    pyds = glob.glob(os.path.join(wheels, "pydataset-*.tar.gz"))[0]
    with open(os.path.join(out, "titanic.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pclass", "sex", "age", "sibsp", "parch", "fare", "survived"])
        n = 0
        for row in titanic_rows(vaex):
            w.writerow(row)
            n += 1
    assert n == 1045, n
    with open(os.path.join(out, "boston.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        rows = list(boston_rows(pyds))
        assert len(rows) == 507
        w.writerows(rows)


if __name__ == "__main__":
    main()
