import numpy as np
import pytest
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import MinMaxScaler
from sklearn.utils.class_weight import compute_class_weight

from dataset.prep import ScalerParams, apply_scaler, class_weights, clean, fit_scaler, prepare, stratified_split
from features.matrix import FEATURE_COLUMNS, FeatureMatrix
from models.experiment import SplitSpec
from models.robot import MOVEMENT_NAMES
from utils.errors import DatasetError


def synthetic_matrix(flows_per_class=10, rows_per_flow=14, classes=MOVEMENT_NAMES, seed=0):
    rng = np.random.default_rng(seed)
    values, labels, flow_ids = [], [], []
    for c, label in enumerate(classes):
        for f in range(flows_per_class):
            block = rng.normal(size=(rows_per_flow, len(FEATURE_COLUMNS)))
            block[:, 7] += 3 * c
            values.append(block)
            labels += [label] * rows_per_flow
            flow_ids += [f"{label}-{f}"] * rows_per_flow
    return FeatureMatrix(np.vstack(values), labels, flow_ids)


def test_clean_drops_constant_column():
    matrix = synthetic_matrix(flows_per_class=2)
    values = matrix.values.copy()
    values[:, FEATURE_COLUMNS.index("tcp_hdr_len")] = 32
    cleaned, report = clean(matrix.with_values(values))
    assert report.dropped_columns == ["tcp_hdr_len"]
    assert "tcp_hdr_len" not in cleaned.columns
    assert len(cleaned.columns) == 15


def test_clean_drops_non_finite_rows():
    matrix = synthetic_matrix(flows_per_class=2)
    values = matrix.values.copy()
    values[3, FEATURE_COLUMNS.index("ack_rtt_s")] = np.nan
    values[5, 0] = np.inf
    cleaned, report = clean(matrix.with_values(values))
    assert report.dropped_rows == 2
    assert cleaned.n_rows == matrix.n_rows - 2


def test_clean_is_identity_on_clean_matrix():
    matrix = synthetic_matrix(flows_per_class=2)
    cleaned, report = clean(matrix)
    assert report.dropped_columns == [] and report.dropped_rows == 0
    assert np.array_equal(cleaned.values, matrix.values)


def test_clean_rejects_all_constant():
    matrix = FeatureMatrix(np.ones((4, 16)), ["X"] * 4, ["f"] * 4)
    with pytest.raises(DatasetError, match="no informative features"):
        clean(matrix)


def one_column(values, columns=("a",)):
    data = np.asarray(values, dtype=np.float64).reshape(-1, len(columns))
    n = data.shape[0]
    return FeatureMatrix(data, ["X"] * n, ["f"] * n, list(columns))


def test_scaler_endpoint_mapping():
    train = one_column([2, 4, 6])
    scaled = apply_scaler(fit_scaler(train), train)
    assert scaled.values[:, 0].tolist() == [0.0, 0.5, 1.0]


def test_scaler_degenerate_column_is_zero():
    train = one_column([7, 7, 7])
    assert apply_scaler(fit_scaler(train), train).values[:, 0].tolist() == [0.0, 0.0, 0.0]


def test_scaler_extrapolates_unseen_values():
    params = fit_scaler(one_column([2, 4, 6]))
    assert apply_scaler(params, one_column([8])).values[0, 0] == pytest.approx(1.5)


def test_scaler_reorders_and_checks_columns(tmp_path):
    train = one_column([[1, 10], [3, 30]], columns=("a", "b"))
    params = fit_scaler(train)
    swapped = one_column([[30, 3]], columns=("b", "a"))
    assert apply_scaler(params, swapped).values.tolist() == pytest.approx([[1.0, 1.0]])
    with pytest.raises(DatasetError, match="lacks scaled columns"):
        apply_scaler(params, one_column([1], columns=("a",)))
    params.save(tmp_path / "scaler.json")
    assert ScalerParams.load(tmp_path / "scaler.json") == params


def test_training_partition_scales_into_unit_interval():
    data = prepare(synthetic_matrix(), SplitSpec(seed=3))
    assert data.train.values.min() >= 0.0
    assert data.train.values.max() <= 1.0


def test_split_is_60_20_20_and_flow_atomic():
    matrix = synthetic_matrix()
    train, validation, test = stratified_split(matrix, SplitSpec(seed=1))
    # 70 flows: 14 to test, then ceil(0.2 * 56) = 12 to validation
    assert (train.n_rows, validation.n_rows, test.n_rows) == (616, 168, 196)
    train_flows, val_flows, test_flows = (set(p.flow_ids) for p in (train, validation, test))
    assert not train_flows & val_flows
    assert not train_flows & test_flows
    assert not val_flows & test_flows
    assert train.n_rows + validation.n_rows + test.n_rows == matrix.n_rows
    for part in (train, validation, test):
        assert set(part.labels) == set(MOVEMENT_NAMES)
    assert {label: list(test.labels).count(label) for label in MOVEMENT_NAMES} == {m: 28 for m in MOVEMENT_NAMES}


def test_split_test_flows_match_train_test_split():
    matrix = synthetic_matrix()
    flow_labels = matrix.flow_labels()
    ids = np.array(list(flow_labels), dtype=object)
    _, expected = train_test_split(ids, test_size=0.2, stratify=np.array(list(flow_labels.values()), dtype=str),
                                   random_state=5)
    _, _, test = stratified_split(matrix, SplitSpec(seed=5))
    assert set(test.flow_ids) == set(expected)


def test_split_is_deterministic():
    matrix = synthetic_matrix()
    first = stratified_split(matrix, SplitSpec(seed=9))
    second = stratified_split(matrix, SplitSpec(seed=9))
    for a, b in zip(first, second):
        assert list(a.flow_ids) == list(b.flow_ids)


def test_split_rejects_tiny_class():
    matrix = synthetic_matrix(flows_per_class=3, rows_per_flow=2)
    tiny = FeatureMatrix.concat([matrix, FeatureMatrix(np.zeros((3, 16)), ["Q"] * 3, ["q"] * 3)])
    with pytest.raises(DatasetError, match="class Q has 3 rows"):
        stratified_split(tiny, SplitSpec())


def test_split_without_room_to_stratify_still_covers_every_flow():
    # 5 flows per class leave too few validation flows to hold all 7 classes
    matrix = synthetic_matrix(flows_per_class=5, rows_per_flow=2)
    parts = stratified_split(matrix, SplitSpec(seed=2))
    assert sum(p.n_rows for p in parts) == matrix.n_rows
    assert all(p.n_rows > 0 for p in parts)
    assert len(set().union(*(set(p.flow_ids) for p in parts))) == 35


def test_split_of_a_single_flow_is_an_error():
    with pytest.raises(DatasetError, match="cannot split"):
        stratified_split(synthetic_matrix(flows_per_class=1, classes=["X"]), SplitSpec())


def test_scaler_agrees_with_min_max_scaler():
    rng = np.random.default_rng(7)
    train = one_column(rng.normal(size=(30, 3)) * 40, columns=("a", "b", "c"))
    unseen = one_column(rng.normal(size=(10, 3)) * 60, columns=("a", "b", "c"))
    expected = MinMaxScaler().fit(train.values).transform(unseen.values)
    assert apply_scaler(fit_scaler(train), unseen).values == pytest.approx(expected)


def test_weights_match_sklearn_balanced():
    labels = ["X"] * 30 + ["Y"] * 12 + ["Z"] * 3
    matrix = FeatureMatrix(np.zeros((45, 16)), labels, ["f"] * 45)
    expected = compute_class_weight("balanced", classes=np.array(["X", "Y", "Z"]), y=np.array(labels))
    assert [class_weights(matrix).weights[c] for c in "XYZ"] == pytest.approx(list(expected))
    assert class_weights(matrix).weights["Z"] == pytest.approx(45 / (3 * 3))


def test_balanced_weights_are_one():
    weights = class_weights(synthetic_matrix(flows_per_class=1))
    assert set(weights.weights) == set(MOVEMENT_NAMES)
    assert all(w == pytest.approx(1.0) for w in weights.weights.values())


def test_unbalanced_weights():
    matrix = FeatureMatrix(np.zeros((100, 16)), ["X"] * 75 + ["Y"] * 25, ["f"] * 100)
    weights = class_weights(matrix).weights
    assert weights["X"] == pytest.approx(0.6667, abs=1e-4)
    assert weights["Y"] == pytest.approx(2.0)
    assert class_weights(FeatureMatrix(np.zeros((4, 16)), ["Z"] * 4, ["f"] * 4)).weights == {"Z": 1.0}


def test_prepare_keeps_scaler_and_report():
    data = prepare(synthetic_matrix(), SplitSpec(seed=3))
    assert data.scaler.columns == list(FEATURE_COLUMNS)
    assert data.clean_report.dropped_columns == []
    assert data.class_names == MOVEMENT_NAMES
