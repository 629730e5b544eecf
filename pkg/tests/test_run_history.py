import json
import logging

from run_history import RunHistory


def test_sessions_newest_first(tmp_path):
    history = RunHistory(tmp_path / "history.json")
    first = history.add_session("spectrum", "abc", ["a.csv"], {"radius": 0.5})
    second = history.add_session("cloud", "def", ["b.csv", "c.svg"])
    sessions = history.get_sessions()
    assert [s["id"] for s in sessions] == [second, first]
    assert sessions[0]["count"] == 2
    assert sessions[1]["summary"] == {"radius": 0.5}
    assert history.get_session_by_id(first)["command"] == "spectrum"
    assert history.get_session_by_id("missing") is None


def test_history_persists(tmp_path):
    path = tmp_path / "history.json"
    RunHistory(path).add_session("trapped", "abc", ["t.pgm"])
    reloaded = RunHistory(path)
    assert reloaded.get_sessions()[0]["command"] == "trapped"
    assert json.loads(path.read_text(encoding="utf-8"))["sessions"][0]["config_hash"] == "abc"


def test_find_session_for_file(tmp_path):
    history = RunHistory(tmp_path / "history.json")
    target = tmp_path / "out" / "spectrum.csv"
    history.add_session("spectrum", "abc", [str(target)])
    history.add_session("cloud", "def", [str(tmp_path / "cloud.csv")])
    assert history.find_session_for_file(target)["command"] == "spectrum"
    assert history.find_session_for_file(tmp_path / "other.csv") is None


def test_corrupt_history_starts_fresh(tmp_path, caplog):
    path = tmp_path / "history.json"
    path.write_text("{not json", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        history = RunHistory(path)
    assert history.get_sessions() == []
    assert "unreadable" in caplog.text


def test_unexpected_layout(tmp_path):
    path = tmp_path / "history.json"
    path.write_text("[1, 2]", encoding="utf-8")
    assert RunHistory(path).get_sessions() == []


def test_clear_history(tmp_path):
    history = RunHistory(tmp_path / "history.json")
    history.add_session("spectrum", "abc", [])
    history.clear_history()
    assert history.get_sessions() == []
    assert RunHistory(tmp_path / "history.json").get_sessions() == []
