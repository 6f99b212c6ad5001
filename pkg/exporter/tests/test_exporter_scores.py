import pytest

from semcom.metrics import ScoreTable
from semcom_exporter import (ExportError, ExportJob, ProceduralBackend, annotate,
                             content_tokens, export_score_table, image_id_for,
                             score_rows)

PROMPT = "A blue car driving through the city."


@pytest.fixture(scope="module")
def backend():
    return ProceduralBackend(seed=0)


@pytest.fixture(scope="module")
def words():
    return annotate(PROMPT)


def test_content_tokens_positive_and_below_image(backend, words):
    total = content_tokens(PROMPT, words, backend)
    assert 0 < total < backend.image_size ** 2


def test_full_budget_distance_near_zero(backend, words):
    total = content_tokens(PROMPT, words, backend)
    rows = score_rows(PROMPT, words, [total], backend)
    assert rows[0][2] < 0.05


def test_zero_budget_distance_near_saturation(backend, words):
    rows = score_rows(PROMPT, words, [0], backend)
    assert rows[0][2] == pytest.approx(0.6, abs=0.05)
    assert rows[0][3] == pytest.approx(4.9827, abs=1e-6)


def test_distance_non_increasing_within_tolerance(backend, words):
    total = content_tokens(PROMPT, words, backend)
    budgets = list(range(0, total + 100, 100))
    rows = score_rows(PROMPT, words, budgets, backend)
    ds = [r[2] for r in rows]
    for prev, cur in zip(ds, ds[1:]):
        assert cur <= prev + 0.05


def test_quality_monotone_in_budget(backend, words):
    rows = score_rows(PROMPT, words, [0, 200, 400, 10 ** 6], backend)
    qs = [r[3] for r in rows]
    assert qs == sorted(qs)
    assert qs[-1] == pytest.approx(5.2651, abs=1e-6)


def test_table_round_trips_through_primary_loader(tmp_path, backend, words):
    rows = score_rows(PROMPT, words, [0, 300, 600], backend)
    path = str(tmp_path / "scores.csv")
    export_score_table(rows, path)
    with open(path) as fh:
        assert fh.readline().rstrip("\n") == "image_id,tokens,dreamsim,nima_mu"
    table = ScoreTable.from_csv(path)
    image_id = image_id_for(PROMPT)
    d, q = table.score(image_id, 300)
    assert d == pytest.approx(rows[1][2])
    assert q == pytest.approx(rows[1][3])


def test_job_rejects_unsorted_budgets(tmp_path):
    job = ExportJob(prompts=[PROMPT], out_dir=str(tmp_path), budgets=[100, 50])
    with pytest.raises(ExportError):
        job.validate()


def test_job_rejects_negative_and_duplicate_budgets(tmp_path):
    with pytest.raises(ExportError):
        ExportJob(prompts=[PROMPT], out_dir=str(tmp_path), budgets=[-1, 5]).validate()
    with pytest.raises(ExportError):
        ExportJob(prompts=[PROMPT], out_dir=str(tmp_path), budgets=[5, 5]).validate()
