from pathlib import Path

import numpy as np
import pytest

from moco import (
    FeatureDescriptor,
    FeatureSchema,
    LinearModel,
    ObservedDataset,
    load_dataset,
    load_model,
)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def credit():
    return load_dataset(DATA / "credit.csv", DATA / "credit.schema.json")


@pytest.fixture(scope="session")
def credit_model(credit):
    return load_model(DATA / "credit.model.json", credit.schema)


@pytest.fixture(scope="session")
def clinic():
    return load_dataset(DATA / "clinic.csv", DATA / "clinic.schema.json")


@pytest.fixture(scope="session")
def clinic_model(clinic):
    return load_model(DATA / "clinic.model.json", clinic.schema)


@pytest.fixture
def mixed_schema() -> FeatureSchema:
    return FeatureSchema(
        (
            FeatureDescriptor("height", "numerical", range=(0.0, 10.0)),
            FeatureDescriptor("count", "integer", range=(0, 5)),
            FeatureDescriptor("color", "categorical", levels=("red", "green", "blue")),
            FeatureDescriptor("flag", "binary", levels=("no", "yes")),
        )
    )


@pytest.fixture
def mixed_observed(mixed_schema) -> ObservedDataset:
    rng = np.random.default_rng(5)
    rows = []
    for _ in range(80):
        rows.append(
            mixed_schema.validate_point(
                (
                    float(rng.uniform(0, 10)),
                    float(rng.integers(0, 6)),
                    ("red", "green", "blue")[rng.integers(3)],
                    ("no", "yes")[rng.integers(2)],
                )
            )
        )
    return ObservedDataset(mixed_schema, rows)


def numeric_schema(p: int, lo: float = 0.0, hi: float = 1.0) -> FeatureSchema:
    return FeatureSchema(
        tuple(FeatureDescriptor(f"f{j}", "numerical", range=(lo, hi)) for j in range(p))
    )


@pytest.fixture
def identity_model(mixed_schema):
    # prediction = 0.1 * height, other features ignored
    return LinearModel(mixed_schema, intercept=0.0, coefficients=[0.1], encoding=[("height", None)], link="identity")
