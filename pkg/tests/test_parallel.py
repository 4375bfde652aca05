import pytest

from nullitylab.parallel import THREADS_ENV, pmap, thread_cap


def test_pmap_keeps_order(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "4")
    assert pmap(lambda v: v * v, range(50)) == [v * v for v in range(50)]


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
    assert thread_cap() == 1
    monkeypatch.setenv(THREADS_ENV, "0")
    assert thread_cap() == 1
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValueError):
        thread_cap()
    monkeypatch.delenv(THREADS_ENV)
    assert thread_cap() >= 1


def test_grid_result_independent_of_threads(monkeypatch):
    from nullitylab import analyzer as AN
    from nullitylab import catalog as C

    d = C.get("compo_s2xR_bend")
    monkeypatch.setenv(THREADS_ENV, "1")
    one = [r.to_dict() for r in AN.analyze_grid(d, (3, 3, 3))]
    monkeypatch.setenv(THREADS_ENV, "6")
    many = [r.to_dict() for r in AN.analyze_grid(d, (3, 3, 3))]
    assert one == many
