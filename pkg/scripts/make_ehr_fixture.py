"""Regenerate the bundled synthetic EHR encounter table.

Usage: python scripts/make_ehr_fixture.py > src/datawalls/data/ehr_synthetic.csv

Eighty fictitious patients with two or three encounters each (200 rows).
"""

import csv
import random
import sys

FIRST = ["Aoife", "Liam", "Niamh", "Conor", "Saoirse", "Sean", "Ciara", "Darragh", "Orla",
         "Eoin", "Maeve", "Cian", "Roisin", "Padraig", "Grainne", "Fionn"]
LAST = ["Murphy", "Kelly", "Byrne", "Ryan", "Walsh", "OBrien", "Doyle", "McCarthy",
        "Gallagher", "Kennedy", "Lynch", "Quinn"]
ZIPS = ["02139", "02138", "02141", "02142", "02451", "02453", "02458", "02460"]
DIAGNOSES = ["hypertension", "asthma", "type2-diabetes", "influenza", "migraine",
             "copd", "depression", "fracture", "anemia", "bronchitis"]
VISITS = ["outpatient", "inpatient", "emergency", "telehealth"]


def main(seed: int = 20221212) -> None:
    rng = random.Random(seed)
    patients = []
    mrns = rng.sample(range(100000, 999999), 80)
    for i in range(80):
        patients.append({
            "name": f"{rng.choice(FIRST)} {rng.choice(LAST)}",
            "mrn": f"MRN{mrns[i]}",
            "zip": rng.choice(ZIPS),
            "age": str(rng.randint(18, 89)),
            "sex": rng.choice("FM"),
            "visits": 3 if i < 40 else 2,
        })
    rows = []
    for p in patients:
        for _ in range(p["visits"]):
            rows.append([p["name"], p["mrn"], p["zip"], p["age"], p["sex"],
                         rng.choice(DIAGNOSES), rng.choice(VISITS)])
    rng.shuffle(rows)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["name", "mrn", "zip", "age", "sex", "diagnosis", "visit_type"])
    out.writerows(rows)


if __name__ == "__main__":
    main()
