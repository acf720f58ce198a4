"""Unit tests for run reports and the resolution cache."""

import json
from fractions import Fraction

import pytest

from opalg.algebras import free_presentation, realize
from opalg.exactla import Field
from opalg.models import TaskResult
from opalg.operads import commutative
from opalg.reports import (
    ReportDocument,
    ResolutionCache,
    algebra_digest,
    jsonable,
    presentation_from_json,
    presentation_to_json,
)
from opalg.resolutions import resolve

Q = Field(0)


@pytest.fixture(scope="module")
def dual_numbers():
    p = free_presentation(commutative(Q, 4), [("x", 0)], 4, name="D")
    p.add_relation(p.product("mu2", "x", "x"))
    return realize(p)


@pytest.fixture(scope="module")
def resolution(dual_numbers):
    return resolve(dual_numbers, -2)


@pytest.fixture
def cache(tmp_path):
    return ResolutionCache(tmp_path / "cache", "0.1.0")


@pytest.fixture
def report():
    return ReportDocument(
        "0.1.0",
        "ab" * 32,
        "q",
        [
            TaskResult(1, "resolve", "A", trusted={"window": [-3, 0]}, tables={"betti": {-1: 1, 0: 1}}),
            TaskResult(2, "tangent", "A", status="failed", message="transport: not a quasi-isomorphism"),
        ],
    )


class TestJsonable:
    def test_keys_and_scalars(self):
        assert jsonable({1: Fraction(1, 2), "t": (1, 2), "ok": True, "none": None}) == {
            "1": "1/2",
            "t": [1, 2],
            "ok": True,
            "none": None,
        }

    def test_nested(self):
        assert jsonable([{(0, 1): [Fraction(3)]}]) == [{"(0, 1)": ["3"]}]


class TestReportDocument:
    def test_status(self, report):
        assert not report.passed
        assert [t.index for t in report.failed] == [2]

    def test_json_is_deterministic(self, report):
        text = report.to_json()
        assert text == report.to_json()
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert data["tasks"][0]["tables"]["betti"] == {"-1": 1, "0": 1}
        assert "message" not in data["tasks"][0]

    def test_write_creates_directories(self, report, tmp_path):
        path = tmp_path / "out" / "report.json"
        report.write(path)
        assert path.read_text(encoding="utf-8") == report.to_json()

    def test_render(self, report):
        text = report.render()
        assert text.splitlines()[0] == f"opalg 0.1.0  field q  input {'ab' * 6}"
        assert "[1] resolve A: ok" in text
        assert "trusted: window=-3..0" in text
        assert "betti: -1:1  0:1" in text
        assert "transport: not a quasi-isomorphism" in text
        assert text.endswith("1/2 tasks passed")

    def test_render_certificate_table(self):
        cert = {"name": "axioms", "passed": False, "checks": {"units": 3}, "skipped": 1, "failure": {"identity": "units"}}
        doc = ReportDocument("0.1.0", "0" * 64, "f5", [TaskResult(1, "check-operad", "C", tables={"certificate": cert})])
        assert "certificate: FAILED ({'identity': 'units'}); checks {'units': 3}; skipped 1" in doc.render()


class TestPresentationJson:
    def test_rebuilds_same_presentation(self, resolution):
        p = resolution.presentation
        rebuilt = presentation_from_json(json.loads(json.dumps(presentation_to_json(p))), p)
        assert rebuilt.names == p.names
        assert algebra_digest(rebuilt) == algebra_digest(p)

    def test_digest_sees_relations(self, dual_numbers):
        free = dual_numbers.presentation.without_relations()
        assert algebra_digest(free) != algebra_digest(dual_numbers.presentation)


class TestResolutionCache:
    def test_key_depends_on_parameters(self, cache, dual_numbers):
        p = dual_numbers.presentation
        key = cache.cache_key(p, -2, "minimal", 8)
        assert key == cache.cache_key(p, -2, "minimal", 8)
        assert key != cache.cache_key(p, -3, "minimal", 8)
        assert key != cache.cache_key(p, -2, "full", 8)
        assert key != ResolutionCache(cache.cache_dir, "0.2.0").cache_key(p, -2, "minimal", 8)

    def test_miss(self, cache, dual_numbers):
        assert cache.get_cached_resolution("missing", dual_numbers) is None

    def test_store_and_load(self, cache, dual_numbers, resolution):
        key = cache.cache_key(dual_numbers.presentation, -2, "minimal", 8)
        assert cache.cache_resolution(key, resolution)
        assert cache.cache_file(key).exists()

        loaded = cache.get_cached_resolution(key, dual_numbers)
        assert loaded is not None
        assert loaded.presentation.names == resolution.presentation.names
        assert loaded.killed == resolution.killed
        assert loaded.certificate.passed == resolution.certificate.passed
        assert loaded.complete == resolution.complete
        assert [g.weight for g in loaded.presentation.generators] == [
            g.weight for g in resolution.presentation.generators
        ]
        assert loaded.epsilon.chain_map().is_surjective()

    def test_corrupt_entry_is_ignored(self, cache, dual_numbers, mocker):
        warning = mocker.patch("opalg.reports.logger.warning")
        cache.cache_dir.mkdir(parents=True)
        cache.cache_file("bad").write_text("{not json", encoding="utf-8")

        assert cache.get_cached_resolution("bad", dual_numbers) is None
        assert "corrupt cache entry" in warning.call_args[0][0]

    def test_other_engine_version_is_ignored(self, cache, dual_numbers, resolution, mocker):
        mocker.patch("opalg.reports.logger.warning")
        cache.cache_resolution("shared", resolution)
        newer = ResolutionCache(cache.cache_dir, "0.2.0")
        assert newer.get_cached_resolution("shared", dual_numbers) is None

    def test_empty_file_is_a_miss(self, cache, dual_numbers):
        cache.cache_dir.mkdir(parents=True)
        cache.cache_file("empty").touch()
        assert cache.get_cached_resolution("empty", dual_numbers) is None

    def test_unwritable_directory(self, tmp_path, resolution):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert not ResolutionCache(blocker, "0.1.0").cache_resolution("key", resolution)

    def test_clear(self, cache, resolution):
        assert cache.clear() == 0
        cache.cache_resolution("one", resolution)
        cache.cache_resolution("two", resolution)
        assert cache.clear() == 2
        assert list(cache.cache_dir.glob("resolution_*.json")) == []
