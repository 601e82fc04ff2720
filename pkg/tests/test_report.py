import json

import pytest

from conduitnet import InputError, LoadScore, PairKey
from conduitnet.report import (
    build_manifest,
    cartogram_rows,
    compute_histogram,
    multilayer_filename,
    propagated_digest,
    read_conduit_scores,
    read_load_scores,
    read_manifest_digest,
    read_multilayer_rows,
    read_score_column,
    read_sink_scores,
    write_conduit_scores,
    write_load_scores,
    write_multilayer_scores,
    write_sink_scores,
)
from conduitnet.multilayer import MultilayerScore
from conduitnet.scoring import ConduitScore, SinkScore


def test_histogram_hand_example():
    bins = compute_histogram([0.5, 1.6, 1.7], 1.1)
    assert bins == [
        (0.0, 1.1, 1),
        (pytest.approx(1.1), pytest.approx(2.2), 2),
    ]


def test_histogram_empty_and_bad_width():
    assert compute_histogram([], 1.0) == []
    with pytest.raises(InputError):
        compute_histogram([1.0], 0.0)
    with pytest.raises(InputError):
        compute_histogram([1.0], -2.0)


def test_histogram_negative_values_and_gap_bins():
    bins = compute_histogram([-0.5, 2.5], 1.0)
    lows = [b[0] for b in bins]
    counts = [b[2] for b in bins]
    assert lows == [-1.0, 0.0, 1.0, 2.0]
    assert counts == [1, 0, 0, 1]


def test_histogram_boundary_lands_in_upper_bin():
    bins = compute_histogram([1.0], 1.0)
    assert bins == [(1.0, 2.0, 1)]


def test_sink_scores_round_trip(tmp_path):
    path = tmp_path / "sink.csv"
    scores = [SinkScore(PairKey("NLD", "K"), 12.5), SinkScore(PairKey("AAA", "B"), -0.25)]
    write_sink_scores(path, scores, digest="abc123")
    assert read_manifest_digest(path) == "abc123"
    back = read_sink_scores(path)
    assert [(s.pair, s.s) for s in back] == [(s.pair, s.s) for s in sorted(scores, key=lambda s: s.pair)]


def test_conduit_scores_round_trip_with_blanks(tmp_path):
    path = tmp_path / "conduit.csv"
    scores = [
        ConduitScore(PairKey("NLD", "K"), 0.2, 0.1, 19.37, 6.13, 14.36),
        ConduitScore(PairKey("AAA", "B"), 0.0, 0.3, None, 1.2, None),
    ]
    write_conduit_scores(path, scores)
    back = read_conduit_scores(path)
    by_pair = {s.pair: s for s in back}
    assert by_pair[PairKey("NLD", "K")].c_out_std == 19.37
    assert by_pair[PairKey("AAA", "B")].c_out_std is None
    assert by_pair[PairKey("AAA", "B")].c_combined is None
    assert by_pair[PairKey("AAA", "B")].c_in_raw == 0.3


def test_load_scores_round_trip(tmp_path):
    path = tmp_path / "load.csv"
    scores = [LoadScore("GBR", 55.0, 7.87), LoadScore("NLD", 20.0, 3.44)]
    write_load_scores(path, scores)
    back = read_load_scores(path)
    assert [(s.jurisdiction, s.l_raw, s.l_std) for s in back] == [
        ("GBR", 55.0, 7.87), ("NLD", 20.0, 3.44)]


def test_multilayer_round_trip_and_filename(tmp_path):
    assert multilayer_filename(0.5) == "multilayer_scores_beta0.5.csv"
    path = tmp_path / multilayer_filename(0.5)
    scores = [MultilayerScore(PairKey("NLD", "K"), 10.88, 5.06, 8.49, 1.0, 0.5)]
    write_multilayer_scores(path, scores)
    rows = read_multilayer_rows(path)
    assert rows == [(PairKey("NLD", "K"), 10.88, 5.06, 8.49)]


def test_reader_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("jurisdiction,sector,WRONG\nAAA,A,1.0\n")
    with pytest.raises(InputError, match="expected"):
        read_sink_scores(path)


def test_read_score_column_default_named_and_missing(tmp_path):
    path = tmp_path / "m.csv"
    scores = [
        MultilayerScore(PairKey("AAA", "A"), 1.0, 2.0, 1.5, 1.0, 0.5),
        MultilayerScore(PairKey("BBB", "A"), 3.0, 4.0, 3.5, 1.0, 0.5),
    ]
    write_multilayer_scores(path, scores, digest="d1")
    # multilayer rows come out ranked by combined score
    assert read_score_column(path) == [3.5, 1.5]
    assert read_score_column(path, "M_out") == [3.0, 1.0]
    with pytest.raises(InputError, match="no column"):
        read_score_column(path, "Z")


def test_digest_propagation(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    write_sink_scores(a, [], digest="d1")
    write_sink_scores(b, [], digest="d1")
    write_sink_scores(c, [], digest=None)
    assert propagated_digest([a, b]) == "d1"
    assert propagated_digest([a, c]) == "d1"  # undigested input is tolerated
    assert propagated_digest([c]) is None
    write_sink_scores(b, [], digest="d2")
    with pytest.raises(InputError, match="different manifest digests"):
        propagated_digest([a, b])


def test_manifest_digest_covers_bytes_not_mtime(tmp_path):
    paths = {}
    for name in ("firms", "ownership", "tax", "gdp"):
        p = tmp_path / f"{name}.csv"
        p.write_text(f"{name}\n")
        paths[name] = p
    params = {"alpha": 1.0, "betas": [0.5]}
    m1 = build_manifest(paths, params)
    paths["firms"].write_text("firms\n")  # same bytes, fresh mtime
    m2 = build_manifest(paths, params)
    assert m1["digest"] == m2["digest"]
    paths["firms"].write_text("firms2\n")
    m3 = build_manifest(paths, params)
    assert m3["digest"] != m1["digest"]
    m4 = build_manifest(paths, {"alpha": 2.0, "betas": [0.5]})
    assert m4["digest"] != m3["digest"]
    json.dumps(m1)  # manifest must be serializable as written


def test_cartogram_rows_projection():
    entries = [
        (PairKey("NLD", "K"), 8.49),
        (PairKey("LUX", "K"), 5.80),
        (PairKey("NLD", "G"), 1.0),
    ]
    rows, warnings = cartogram_rows(entries, "k")
    assert rows == [("LUX", 5.80), ("NLD", 8.49)]
    assert warnings == []
    rows, warnings = cartogram_rows(entries, "C")
    assert rows == []
    assert warnings and "no scored pairs" in warnings[0]
    with pytest.raises(InputError):
        cartogram_rows(entries, "sector9")
