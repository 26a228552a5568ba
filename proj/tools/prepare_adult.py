#!/usr/bin/env python3
# Copyright 2026 The cfnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the UCI Adult census file (adult.data) into cfnet's CSV + schema.

Categories are coarsened to the groups commonly used in the counterfactual
literature, giving 2 continuous and 6 categorical features (29 encoded
columns). race and gender are declared immutable.

    python3 tools/prepare_adult.py path/to/adult.data data/adult

adult.data can also be read straight out of a wheel or zip archive:

    python3 tools/prepare_adult.py responsibly-0.1.2-py3-none-any.whl data/adult
"""

import argparse
import csv
import io
import json
import os
import sys
import zipfile

RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "gender", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]

WORKCLASS = {
    "Federal-gov": "Government", "State-gov": "Government", "Local-gov": "Government",
    "Self-emp-inc": "Self-Employed", "Self-emp-not-inc": "Self-Employed",
    "Private": "Private",
    "Without-pay": "Other/Unknown", "Never-worked": "Other/Unknown", "?": "Other/Unknown",
}

EDUCATION = {
    "Assoc-voc": "Assoc", "Assoc-acdm": "Assoc",
    "11th": "School", "10th": "School", "7th-8th": "School", "9th": "School",
    "12th": "School", "5th-6th": "School", "1st-4th": "School", "Preschool": "School",
}

MARITAL = {
    "Married-civ-spouse": "Married", "Married-AF-spouse": "Married",
    "Married-spouse-absent": "Married", "Never-married": "Single",
}

OCCUPATION = {
    "Adm-clerical": "White-Collar", "Exec-managerial": "White-Collar",
    "Craft-repair": "Blue-Collar", "Farming-fishing": "Blue-Collar",
    "Handlers-cleaners": "Blue-Collar", "Machine-op-inspct": "Blue-Collar",
    "Transport-moving": "Blue-Collar",
    "Other-service": "Service", "Priv-house-serv": "Service",
    "Protective-serv": "Service", "Tech-support": "Service",
    "Prof-specialty": "Professional", "Sales": "Sales",
    "Armed-Forces": "Other/Unknown", "?": "Other/Unknown",
}

OUT_COLUMNS = ["age", "hours_per_week", "workclass", "education", "marital_status",
               "occupation", "race", "gender", "income"]


def read_raw(path):
    if zipfile.is_zipfile(path):
        with zipfile.ZipFile(path) as z:
            name = next(n for n in z.namelist() if n.endswith("adult.data"))
            return z.read(name).decode("utf-8")
    with open(path, encoding="utf-8") as f:
        return f.read()


def convert(text):
    rows = []
    for rec in csv.reader(io.StringIO(text)):
        if len(rec) != len(RAW_COLUMNS):
            continue
        r = dict(zip(RAW_COLUMNS, (v.strip() for v in rec)))
        rows.append({
            "age": r["age"],
            "hours_per_week": r["hours_per_week"],
            "workclass": WORKCLASS[r["workclass"]],
            "education": EDUCATION.get(r["education"], r["education"]),
            "marital_status": MARITAL.get(r["marital_status"], r["marital_status"]),
            "occupation": OCCUPATION[r["occupation"]],
            "race": "White" if r["race"] == "White" else "Other",
            "gender": r["gender"],
            "income": r["income"].rstrip("."),
        })
    return rows


def schema():
    cat = lambda name, immutable=False: {"name": name, "kind": "categorical", "immutable": immutable}
    return {
        "features": [
            {"name": "age", "kind": "continuous", "immutable": False},
            {"name": "hours_per_week", "kind": "continuous", "immutable": False},
            cat("workclass"), cat("education"), cat("marital_status"), cat("occupation"),
            cat("race", True), cat("gender", True),
        ],
        "label": {"name": "income", "classes": ["<=50K", ">50K"]},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", help="adult.data, or a zip/wheel containing it")
    ap.add_argument("out_dir")
    args = ap.parse_args()
    rows = convert(read_raw(args.source))
    if not rows:
        sys.exit("no rows parsed from " + args.source)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "adult.csv"), "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=OUT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    with open(os.path.join(args.out_dir, "adult_schema.json"), "w") as f:
        json.dump(schema(), f, indent=2)
        f.write("\n")
    print(f"wrote {len(rows)} rows to {args.out_dir}")


if __name__ == "__main__":
    main()
