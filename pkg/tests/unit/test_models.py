"""Unit tests for data models."""

from opalg.models import Certificate, TaskResult


class TestCertificate:
    """Test Certificate data model."""

    def test_defaults(self):
        cert = Certificate("axioms")
        assert cert.passed
        assert cert.checks == {}
        assert cert.skipped == 0
        assert cert.failure is None

    def test_count(self):
        cert = Certificate("axioms")
        cert.count("units")
        cert.count("units", 3)
        cert.count("associativity", 2)
        assert cert.checks == {"units": 4, "associativity": 2}

    def test_fail(self):
        cert = Certificate("axioms")
        cert.fail("associativity", triple=(2, 2, 1))
        assert not cert.passed
        assert cert.failure == {"identity": "associativity", "triple": (2, 2, 1)}

    def test_to_dict_sorts_checks(self):
        cert = Certificate("axioms", checks={"units": 1, "associativity": 2}, bounds={"max_arity": 4})
        cert.notices.append("arity 5 skipped")
        data = cert.to_dict()
        assert list(data["checks"]) == ["associativity", "units"]
        assert data["bounds"] == {"max_arity": 4}
        assert data["notices"] == ["arity 5 skipped"]
        assert Certificate(**data) == cert


class TestTaskResult:
    """Test TaskResult data model."""

    def test_ok(self):
        assert TaskResult(1, "resolve", "A").ok
        assert not TaskResult(1, "resolve", "A", status="failed").ok

    def test_to_dict_omits_empty_message(self):
        data = TaskResult(2, "envelope", "F", tables={"weight_dims": {0: 1}}).to_dict()
        assert "message" not in data
        assert data == {
            "index": 2,
            "command": "envelope",
            "target": "F",
            "status": "ok",
            "trusted": {},
            "tables": {"weight_dims": {0: 1}},
        }

    def test_to_dict_with_message(self):
        data = TaskResult(3, "tangent", "A", status="error", message="window too small").to_dict()
        assert data["message"] == "window too small"
